#include "desing/manifold.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>
#include <vector>

#include "desing/geometry.hpp"
#include "desing/linalg.hpp"

namespace desing {

namespace {

std::atomic<std::uint64_t> g_drift_count{0};

double orth_defect(const Matrix& q) {
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).norm();
}

}  // namespace

ManifoldDims::ManifoldDims(Index rows, Index cols, Index rank)
    : m(rows), n(cols), r(rank) {
  if (m <= 0 || n <= 0 || r < 1 || r >= std::min(m, n)) {
    std::ostringstream os;
    os << "invalid dimensions m=" << m << " n=" << n << " r=" << r
       << " (need 1 <= r < min(m, n))";
    throw InvalidArgument(os.str());
  }
}

MetricParam::MetricParam(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw InvalidArgument("metric parameter alpha must be positive and finite");
  }
}

ManifoldPoint::ManifoldPoint(Matrix U, Vector sigma, Matrix V, double orth_tol) {
  if (U.cols() != sigma.size() || V.cols() != sigma.size()) {
    throw InvalidArgument("factor shapes are inconsistent");
  }
  dims_ = ManifoldDims(U.rows(), V.rows(), sigma.size());
  if (orth_defect(U) > orth_tol) {
    throw OrthonormalityViolation("U does not have orthonormal columns");
  }
  if (orth_defect(V) > orth_tol) {
    throw OrthonormalityViolation("V does not have orthonormal columns");
  }
  for (Index i = 0; i < sigma.size(); ++i) {
    if (!std::isfinite(sigma(i))) {
      throw InvalidArgument("singular values must be finite");
    }
    if (sigma(i) < -orth_tol) {
      throw NegativeSingularValue("negative singular value");
    }
    sigma(i) = std::max(sigma(i), 0.0);
  }

  const Index r = sigma.size();
  std::vector<Index> order(static_cast<std::size_t>(r));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index a, Index b) { return sigma(a) > sigma(b); });
  U_.resize(U.rows(), r);
  V_.resize(V.rows(), r);
  sigma_.resize(r);
  for (Index j = 0; j < r; ++j) {
    const Index src = order[static_cast<std::size_t>(j)];
    U_.col(j) = U.col(src);
    V_.col(j) = V.col(src);
    sigma_(j) = sigma(src);
  }
}

AmbientVector::AmbientVector(Matrix y, Matrix z, double orth_tol)
    : Y(std::move(y)), Z(std::move(z)) {
  if (Z.rows() != Z.cols() || Z.rows() != Y.cols()) {
    throw InvalidArgument("ambient vector shapes are inconsistent");
  }
  if ((Z - Z.transpose()).norm() > orth_tol * std::max(1.0, Z.norm())) {
    throw InvalidArgument("Z must be symmetric");
  }
}

ManifoldPoint from_factors(const Matrix& U, const Vector& sigma, const Matrix& V,
                           double orth_tol) {
  return ManifoldPoint(U, sigma, V, orth_tol);
}

ManifoldPoint from_dense(const Matrix& X, const Matrix& P, Index r, double orth_tol) {
  const Index m = X.rows();
  const Index n = X.cols();
  ManifoldDims dims(m, n, r);
  if (P.rows() != n || P.cols() != n) {
    throw InvalidArgument("P must be n x n");
  }
  if ((P - P.transpose()).norm() > orth_tol * std::max(1.0, P.norm())) {
    throw NotOnManifold("P is not symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (P + P.transpose()));
  const Vector& lam = eig.eigenvalues();  // ascending
  Index rank_p = 0;
  double idem_defect = 0.0;
  for (Index i = 0; i < n; ++i) {
    if (lam(i) > 0.5) {
      ++rank_p;
      idem_defect = std::max(idem_defect, std::abs(lam(i) - 1.0));
    } else {
      idem_defect = std::max(idem_defect, std::abs(lam(i)));
    }
  }
  if (rank_p != n - r) {
    std::ostringstream os;
    os << "rank(P) = " << rank_p << " but n - r = " << n - r;
    throw RankMismatch(os.str());
  }
  if (idem_defect > 1e2 * orth_tol) {
    throw NotOnManifold("P is not an orthogonal projector");
  }
  const double xnorm = X.norm();
  if ((X * P).norm() > orth_tol * std::max(1.0, xnorm)) {
    throw NotOnManifold("X P != 0");
  }
  // The r eigenvectors with eigenvalue 0 span ker(P).
  Matrix V = eig.eigenvectors().leftCols(r);
  linalg::ThinSVD svd = linalg::thin_svd(X * V);
  return ManifoldPoint(svd.U, svd.s, V * svd.H, orth_tol);
}

std::pair<Matrix, Matrix> to_dense(const ManifoldPoint& pt) {
  Matrix X = pt.U_sigma() * pt.V().transpose();
  Matrix P = Matrix::Identity(pt.dims().n, pt.dims().n) - pt.V() * pt.V().transpose();
  return {std::move(X), std::move(P)};
}

TangentVector tangent_from_parts(const ManifoldPoint& pt, Matrix K, Matrix Vp,
                                 double orth_tol) {
  const ManifoldDims& d = pt.dims();
  if (K.rows() != d.m || K.cols() != d.r || Vp.rows() != d.n || Vp.cols() != d.r) {
    throw InvalidArgument("tangent factor shapes are inconsistent");
  }
  Matrix vtvp = pt.V().transpose() * Vp;
  if (vtvp.norm() > orth_tol * std::max(1.0, Vp.norm())) {
    g_drift_count.fetch_add(1, std::memory_order_relaxed);
  }
  Vp.noalias() -= pt.V() * vtvp;
  return {std::move(K), std::move(Vp)};
}

AmbientVector tangent_to_ambient(const ManifoldPoint& pt, const TangentVector& t) {
  AmbientVector out;
  out.Y = t.K * pt.V().transpose() + pt.U_sigma() * t.Vp.transpose();
  Matrix vpvt = t.Vp * pt.V().transpose();
  out.Z = -(vpvt + vpvt.transpose());
  return out;
}

std::uint64_t tangent_drift_count() { return g_drift_count.load(); }
void reset_tangent_drift_count() { g_drift_count.store(0); }

ManifoldPoint random_point(const ManifoldDims& dims, std::uint64_t seed,
                           SigmaRange range) {
  std::mt19937_64 rng(seed);
  Matrix U = linalg::random_stiefel(dims.m, dims.r, rng);
  Matrix V = linalg::random_stiefel(dims.n, dims.r, rng);
  std::uniform_real_distribution<double> unif(range.lo, range.hi);
  Vector s(dims.r);
  for (Index i = 0; i < dims.r; ++i) {
    s(i) = unif(rng);
  }
  return ManifoldPoint(std::move(U), std::move(s), std::move(V));
}

TangentVector random_tangent(const ManifoldPoint& pt, const MetricParam& metric,
                             std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const ManifoldDims& d = pt.dims();
  Matrix K = linalg::gaussian(d.m, d.r, rng);
  Matrix Vp = linalg::gaussian(d.n, d.r, rng);
  // A Gaussian Vp is never in range(V); the cleanup is expected here.
  Vp -= pt.V() * (pt.V().transpose() * Vp);
  TangentVector t{std::move(K), std::move(Vp)};
  t *= 1.0 / norm(pt, t, metric);
  return t;
}

PointDistance distance(const ManifoldPoint& a, const ManifoldPoint& b) {
  const Matrix ua = a.U_sigma();
  const Matrix ub = b.U_sigma();
  const Matrix vv = a.V().transpose() * b.V();
  const double xa2 = a.sigma().squaredNorm();
  const double xb2 = b.sigma().squaredNorm();
  const double cross = ((ua.transpose() * ub).array() * vv.array()).sum();
  PointDistance out;
  out.x = std::sqrt(std::max(0.0, xa2 + xb2 - 2.0 * cross));
  const double r = static_cast<double>(a.dims().r);
  out.p = std::sqrt(std::max(0.0, 2.0 * r - 2.0 * vv.squaredNorm()));
  return out;
}

}  // namespace desing
