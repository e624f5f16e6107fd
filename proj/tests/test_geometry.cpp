#include <gtest/gtest.h>

#include <random>

#include "desing/geometry.hpp"
#include "desing/linalg.hpp"

namespace desing {
namespace {

ManifoldPoint point_with_sigma(Index m, Index n, const Vector& s, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return ManifoldPoint(linalg::random_stiefel(m, s.size(), rng), s,
                       linalg::random_stiefel(n, s.size(), rng));
}

AmbientVector random_ambient(Index m, Index n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  Matrix y = linalg::gaussian(m, n, rng);
  Matrix z = linalg::gaussian(n, n, rng);
  return AmbientVector(y, 0.5 * (z + z.transpose()));
}

TEST(SFactor, Examples) {
  Vector s(2);
  s << 2.0, 1.0;
  const ManifoldPoint pt = point_with_sigma(4, 4, s, 1);
  const Vector d = sfactor(pt, MetricParam(0.5));
  EXPECT_DOUBLE_EQ(d(0), 5.0);
  EXPECT_DOUBLE_EQ(d(1), 2.0);

  const ManifoldPoint zero = point_with_sigma(4, 4, Vector::Zero(3), 2);
  EXPECT_EQ(sfactor(zero, MetricParam(1.0)), Vector::Constant(3, 2.0));

  const ManifoldPoint one = point_with_sigma(3, 3, Vector::Ones(1), 3);
  EXPECT_DOUBLE_EQ(sfactor(one, MetricParam(0.05))(0), 1.1);
}

TEST(Inner, Examples) {
  const ManifoldPoint pt = point_with_sigma(3, 3, Vector::Ones(1), 4);
  const MetricParam metric(0.5);
  TangentVector a = TangentVector::zero(pt.dims());
  a.K(0, 0) = 1.0;
  EXPECT_DOUBLE_EQ(inner(pt, a, a, metric), 1.0);
  EXPECT_DOUBLE_EQ(norm(pt, a, metric), 1.0);

  TangentVector b = TangentVector::zero(pt.dims());
  b.Vp = linalg::orth_complement(pt.V()).col(0);
  EXPECT_NEAR(inner(pt, b, b, metric), 2.0, 1e-15);
  EXPECT_EQ(norm(pt, TangentVector::zero(pt.dims()), metric), 0.0);
}

TEST(Inner, MatchesAmbientOracleAndIsSymmetric) {
  for (int trial = 0; trial < 20; ++trial) {
    const MetricParam metric(trial % 2 ? 0.05 : 5.0);
    const ManifoldPoint pt = random_point(ManifoldDims(9, 7, 3), trial, {0.0, 2.0});
    const TangentVector a = random_tangent(pt, metric, 100 + trial);
    const TangentVector b = random_tangent(pt, metric, 200 + trial);
    const double ab = inner(pt, a, b, metric);
    EXPECT_EQ(ab, inner(pt, b, a, metric));
    const double oracle =
        ambient_inner(tangent_to_ambient(pt, a), tangent_to_ambient(pt, b), metric);
    EXPECT_LE(std::abs(ab - oracle), 1e-12 * std::max(1.0, std::abs(oracle)));
    const AmbientVector aa = tangent_to_ambient(pt, a);
    EXPECT_NEAR(norm(pt, a, metric), std::sqrt(ambient_inner(aa, aa, metric)), 1e-12);
  }
}

TEST(Project, TangentVectorsAreFixed) {
  const MetricParam metric(0.5);
  const ManifoldPoint pt = random_point(ManifoldDims(8, 6, 2), 5, {0.0, 1.0});
  const TangentVector t = random_tangent(pt, metric, 6);
  const TangentVector p = project(pt, DenseAmbient(tangent_to_ambient(pt, t)), metric);
  EXPECT_LE(norm(pt, p - t, metric), 1e-12);
}

// Least squares over an explicit basis of the tangent space in the
// alpha-weighted ambient norm.
TEST(Project, MatchesDenseLeastSquares) {
  const Index m = 8, n = 8, r = 2;
  for (int trial = 0; trial < 6; ++trial) {
    const MetricParam metric(trial % 3 == 0 ? 0.05 : (trial % 3 == 1 ? 0.5 : 5.0));
    Vector s(r);
    s << 1.3, trial < 3 ? 0.0 : 0.4;
    const ManifoldPoint pt = point_with_sigma(m, n, s, 10 + trial);
    const Matrix vperp = linalg::orth_complement(pt.V());
    const Index nb = (m + n - r) * r;
    Matrix basis(m * n + n * n, nb);
    Index c = 0;
    auto push = [&](const TangentVector& t) {
      const AmbientVector a = tangent_to_ambient(pt, t);
      basis.col(c).head(m * n) = a.Y.reshaped();
      basis.col(c).tail(n * n) = std::sqrt(metric.alpha()) * a.Z.reshaped();
      ++c;
    };
    for (Index i = 0; i < m; ++i) {
      for (Index j = 0; j < r; ++j) {
        TangentVector t = TangentVector::zero(pt.dims());
        t.K(i, j) = 1.0;
        push(t);
      }
    }
    for (Index i = 0; i < n - r; ++i) {
      for (Index j = 0; j < r; ++j) {
        TangentVector t = TangentVector::zero(pt.dims());
        t.Vp.col(j) = vperp.col(i);
        push(t);
      }
    }
    const AmbientVector y = random_ambient(m, n, 50 + trial);
    Vector rhs(m * n + n * n);
    rhs << y.Y.reshaped(), std::sqrt(metric.alpha()) * y.Z.reshaped();
    const Vector coef = basis.colPivHouseholderQr().solve(rhs);
    const Vector oracle = basis * coef;

    const AmbientVector got = tangent_to_ambient(pt, project(pt, DenseAmbient(y), metric));
    Vector gv(m * n + n * n);
    gv << got.Y.reshaped(), std::sqrt(metric.alpha()) * got.Z.reshaped();
    EXPECT_LE((gv - oracle).norm(), 1e-10 * oracle.norm()) << "trial " << trial;
  }
}

TEST(Project, StructuredMatchesDense) {
  for (int trial = 0; trial < 10; ++trial) {
    const MetricParam metric(0.5);
    const ManifoldPoint pt = random_point(ManifoldDims(11, 9, 3), trial, {0.0, 1.0});
    const AmbientVector y = random_ambient(11, 9, 70 + trial);
    const TangentVector a = project(pt, DenseAmbient(y), metric);
    const TangentVector b = project(pt, y, metric);
    EXPECT_LE(norm(pt, a - b, metric), 1e-13 * norm(pt, b, metric));
  }
}

TEST(Project, IdempotentPythagoreanSelfAdjoint) {
  const MetricParam metric(0.05);
  for (int trial = 0; trial < 10; ++trial) {
    const ManifoldPoint pt = random_point(ManifoldDims(7, 10, 2), trial, {0.0, 3.0});
    const AmbientVector y = random_ambient(7, 10, 90 + trial);
    const AmbientVector w = random_ambient(7, 10, 190 + trial);
    const TangentVector py = project(pt, DenseAmbient(y), metric);
    const AmbientVector pya = tangent_to_ambient(pt, py);
    const TangentVector ppy = project(pt, DenseAmbient(pya), metric);
    EXPECT_LE(norm(pt, ppy - py, metric), 1e-12 * norm(pt, py, metric));

    AmbientVector res;
    res.Y = y.Y - pya.Y;
    res.Z = y.Z - pya.Z;
    const double total = ambient_inner(y, y, metric);
    const double parts = inner(pt, py, py, metric) + ambient_inner(res, res, metric);
    EXPECT_LE(std::abs(total - parts), 1e-10 * total);

    // <P y, w> = <y, P w>
    const AmbientVector pwa = tangent_to_ambient(pt, project(pt, DenseAmbient(w), metric));
    const double lhs = ambient_inner(pya, w, metric);
    const double rhs = ambient_inner(y, pwa, metric);
    EXPECT_LE(std::abs(lhs - rhs), 1e-12 * std::sqrt(total * ambient_inner(w, w, metric)));
  }
}

TEST(Project, ZeroZUsesEmptyProduct) {
  class YOnly final : public AmbientOperator {
   public:
    explicit YOnly(const Matrix& y) : y_(y) {}
    Matrix y_times(const Matrix& a) const override { return y_ * a; }
    Matrix yt_times(const Matrix& b) const override { return y_.transpose() * b; }
    Matrix z_times(const Matrix&) const override { return Matrix(); }

   private:
    const Matrix& y_;
  };
  const MetricParam metric(0.5);
  const ManifoldPoint pt = random_point(ManifoldDims(6, 5, 2), 1, {0.1, 1.0});
  const AmbientVector y = random_ambient(6, 5, 2);
  const AmbientVector y0(y.Y, Matrix::Zero(5, 5));
  const TangentVector a = project(pt, YOnly(y.Y), metric);
  const TangentVector b = project(pt, y0, metric);
  EXPECT_LE(norm(pt, a - b, metric), 1e-13 * norm(pt, b, metric));
}

TEST(NormalSample, OrthogonalToTangentSpace) {
  for (int trial = 0; trial < 5; ++trial) {
    const MetricParam metric(trial % 2 ? 0.5 : 0.05);
    const ManifoldPoint pt = random_point(ManifoldDims(9, 8, 3), trial, {0.0, 2.0});
    const AmbientVector nv = normal_sample(pt, metric, 300 + trial);
    EXPECT_LE((nv.Z - nv.Z.transpose()).norm(), 1e-14);
    const double nn = std::sqrt(ambient_inner(nv, nv, metric));
    for (int k = 0; k < 50; ++k) {
      const TangentVector t = random_tangent(pt, metric, 1000 * trial + k);
      const double ip = ambient_inner(nv, tangent_to_ambient(pt, t), metric);
      EXPECT_LE(std::abs(ip), 1e-12 * nn * norm(pt, t, metric));
    }
    EXPECT_LE(norm(pt, project(pt, DenseAmbient(nv), metric), metric), 1e-12 * nn);
  }
}

// With Sigma = 0 the constraint Sigma A = 2 alpha D pins D = 0 and leaves A free.
TEST(NormalSample, ZeroSigmaForcesZeroD) {
  const MetricParam metric(0.5);
  const ManifoldPoint pt = point_with_sigma(7, 6, Vector::Zero(2), 8);
  const AmbientVector nv = normal_sample(pt, metric, 9);
  const Matrix vperp = linalg::orth_complement(pt.V());
  const Matrix d = vperp.transpose() * nv.Z * pt.V();
  EXPECT_LE(d.norm(), 1e-13);
  const Matrix a = pt.U().transpose() * nv.Y * vperp;
  EXPECT_GT(a.norm(), 1e-3);
}

}  // namespace
}  // namespace desing
