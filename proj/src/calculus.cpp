#include "desing/calculus.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "desing/linalg.hpp"

namespace desing {

namespace {

// w - U (Sigma^2 S^{-1} (U^T w)), i.e. M w without forming the m x m matrix.
Matrix apply_m(const ManifoldPoint& pt, const Vector& s_inv, const Matrix& w) {
  const Vector weight = pt.sigma().array().square() * s_inv.array();
  return w - pt.U() * (weight.asDiagonal() * (pt.U().transpose() * w));
}

// (I - V V^T) w
Matrix apply_p(const ManifoldPoint& pt, Matrix w) {
  w.noalias() -= pt.V() * (pt.V().transpose() * w);
  return w;
}

}  // namespace

FactoredMatrix factored(const ManifoldPoint& pt) { return {pt.U_sigma(), pt.V()}; }

FactoredDirection factored(const ManifoldPoint& pt, const TangentVector& t) {
  return {t.K, pt.V(), pt.U_sigma(), t.Vp};
}

TangentVector riemannian_gradient(const ManifoldPoint& pt, const LocalModel& f,
                                  const MetricParam& metric) {
  const Vector s_inv = sfactor(pt, metric).cwiseInverse();
  TangentVector g;
  g.K = f.grad_right(pt.V());
  g.Vp = apply_p(pt, f.grad_left(pt.U_sigma())) * s_inv.asDiagonal();
  return g;
}

TangentVector hessian_vec(const ManifoldPoint& pt, const TangentVector& t,
                          const LocalModel& f, const MetricParam& metric) {
  const Vector s_inv = sfactor(pt, metric).cwiseInverse();
  const Matrix us = pt.U_sigma();
  auto [hv, htus] = f.hess_products(factored(pt, t), pt.V(), us);

  TangentVector out;
  out.K = std::move(hv);
  out.K += apply_m(pt, s_inv, f.grad_right(t.Vp));
  Matrix w = std::move(htus);
  w += f.grad_left(apply_m(pt, s_inv, t.K));
  out.Vp = apply_p(pt, std::move(w)) * s_inv.asDiagonal();
  return out;
}

OptimalityReport optimality_report(const ManifoldPoint& pt, const LocalModel& f,
                                   const MetricParam& metric, bool estimate_hessian_eig) {
  const Vector s_inv = sfactor(pt, metric).cwiseInverse();
  OptimalityReport rep;
  const Matrix kv = f.grad_right(pt.V());
  const Matrix gtus = f.grad_left(pt.U_sigma());
  rep.kv_residual = kv.norm();
  rep.usigma_residual = gtus.norm();
  TangentVector g{kv, apply_p(pt, gtus) * s_inv.asDiagonal()};
  rep.grad_norm = norm(pt, g, metric);
  if (estimate_hessian_eig) {
    rep.hess_min_eig_estimate = hessian_min_eig(pt, f, metric);
  }
  return rep;
}

double grad_fp_norm(const ManifoldPoint& pt, const LocalModel& f, std::uint64_t seed) {
  if (auto g = f.dense_gradient()) {
    return linalg::spectral_norm(apply_p(pt, g->transpose()).transpose());
  }
  std::mt19937_64 rng(seed);
  Matrix v = apply_p(pt, linalg::gaussian(pt.dims().n, 1, rng));
  double vn = v.norm();
  if (vn == 0.0) {
    return 0.0;
  }
  v /= vn;
  double estimate = 0.0;
  for (int it = 0; it < 50; ++it) {
    // w = P G^T G P v
    Matrix w = apply_p(pt, f.grad_left(f.grad_right(v)));
    const double lam = std::sqrt(std::max(0.0, v.col(0).dot(w.col(0))));
    const double wn = w.norm();
    if (wn == 0.0) {
      return 0.0;
    }
    v = w / wn;
    const bool done = std::abs(lam - estimate) <= 1e-6 * std::max(lam, 1e-300);
    estimate = lam;
    if (done) {
      break;
    }
  }
  return estimate;
}

double hessian_norm_bound(const ManifoldPoint& pt, const LocalModel& f,
                          const MetricParam& metric) {
  const double sigma_r = pt.sigma()(pt.dims().r - 1);
  const double coeff = 1.0 / std::sqrt(2.0 * metric.alpha() + sigma_r * sigma_r);
  return f.hessian_op_norm() + coeff * grad_fp_norm(pt, f);
}

double hessian_min_eig(const ManifoldPoint& pt, const LocalModel& f,
                       const MetricParam& metric, Index max_iters, std::uint64_t seed) {
  const Index dim = pt.dims().manifold_dim();
  const Index iters = std::min<Index>(2 * dim, max_iters);
  std::vector<TangentVector> basis;
  std::vector<double> alphas;
  std::vector<double> betas;
  basis.push_back(random_tangent(pt, metric, seed));
  for (Index j = 0; j < iters; ++j) {
    TangentVector w = hessian_vec(pt, basis.back(), f, metric);
    const double a = inner(pt, basis.back(), w, metric);
    alphas.push_back(a);
    // Full reorthogonalization, twice.
    for (int pass = 0; pass < 2; ++pass) {
      for (const TangentVector& q : basis) {
        w -= inner(pt, q, w, metric) * q;
      }
    }
    const double b = norm(pt, w, metric);
    if (b <= 1e-12 * std::max(1.0, std::abs(a)) || j + 1 == iters) {
      break;
    }
    betas.push_back(b);
    w *= 1.0 / b;
    basis.push_back(std::move(w));
  }
  const Index k = static_cast<Index>(alphas.size());
  Matrix T = Matrix::Zero(k, k);
  for (Index i = 0; i < k; ++i) {
    T(i, i) = alphas[static_cast<std::size_t>(i)];
    if (i + 1 < k) {
      T(i, i + 1) = T(i + 1, i) = betas[static_cast<std::size_t>(i)];
    }
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(T, Eigen::EigenvaluesOnly);
  return eig.eigenvalues()(0);
}

double hessian_op_norm_estimate(const ManifoldPoint& pt, const LocalModel& f,
                                const MetricParam& metric, int iters, std::uint64_t seed) {
  TangentVector v = random_tangent(pt, metric, seed);
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    TangentVector w = hessian_vec(pt, v, f, metric);
    const double wn = norm(pt, w, metric);
    if (wn == 0.0) {
      return 0.0;
    }
    estimate = wn;
    v = (1.0 / wn) * std::move(w);
  }
  return estimate;
}

}  // namespace desing
