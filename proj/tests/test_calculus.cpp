#include <gtest/gtest.h>

#include <random>

#include "desing/calculus.hpp"
#include "desing/completion.hpp"
#include "desing/linalg.hpp"
#include "desing/retraction.hpp"

namespace desing {
namespace {

// A rank-r target together with a point representing it exactly.
struct Planted {
  Matrix a;
  ManifoldPoint pt;
};

Planted planted(Index m, Index n, Index r, std::uint64_t seed) {
  ManifoldPoint pt = random_point(ManifoldDims(m, n, r), seed, {0.5, 2.0});
  return {to_dense(pt).first, pt};
}

// Hides the dense gradient so the matrix-free code paths are exercised.
class Opaque final : public LocalModel {
 public:
  explicit Opaque(std::unique_ptr<LocalModel> inner) : inner_(std::move(inner)) {}
  double value() const override { return inner_->value(); }
  Matrix grad_right(const Matrix& a) const override { return inner_->grad_right(a); }
  Matrix grad_left(const Matrix& b) const override { return inner_->grad_left(b); }
  Matrix hess_right(const FactoredDirection& d, const Matrix& a) const override {
    return inner_->hess_right(d, a);
  }
  Matrix hess_left(const FactoredDirection& d, const Matrix& b) const override {
    return inner_->hess_left(d, b);
  }
  double hessian_op_norm() const override { return inner_->hessian_op_norm(); }

 private:
  std::unique_ptr<LocalModel> inner_;
};

// Dense Riemannian Hessian in a (non-orthonormal) coordinate basis of the
// tangent space, reduced to the symmetric eigenproblem G^{-1/2} H G^{-1/2}.
Vector dense_hessian_eigs(const ManifoldPoint& pt, const LocalModel& f,
                          const MetricParam& metric) {
  const ManifoldDims& d = pt.dims();
  const Matrix vperp = linalg::orth_complement(pt.V());
  std::vector<TangentVector> basis;
  for (Index i = 0; i < d.m; ++i) {
    for (Index j = 0; j < d.r; ++j) {
      TangentVector t = TangentVector::zero(d);
      t.K(i, j) = 1.0;
      basis.push_back(t);
    }
  }
  for (Index i = 0; i < vperp.cols(); ++i) {
    for (Index j = 0; j < d.r; ++j) {
      TangentVector t = TangentVector::zero(d);
      t.Vp.col(j) = vperp.col(i);
      basis.push_back(t);
    }
  }
  const Index nb = static_cast<Index>(basis.size());
  Matrix g(nb, nb), h(nb, nb);
  for (Index j = 0; j < nb; ++j) {
    const TangentVector hj = hessian_vec(pt, basis[j], f, metric);
    for (Index i = 0; i < nb; ++i) {
      g(i, j) = inner(pt, basis[i], basis[j], metric);
      h(i, j) = inner(pt, basis[i], hj, metric);
    }
  }
  const Matrix gi = linalg::inv_sqrt_spd(g);
  Matrix sym = gi * h * gi;
  sym = 0.5 * (sym + sym.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  return es.eigenvalues();
}

TEST(Gradient, VanishesAtTarget) {
  const Planted p = planted(8, 7, 3, 1);
  const QuadraticCost f(p.a);
  const auto model = f.at(factored(p.pt));
  const TangentVector g = riemannian_gradient(p.pt, *model, MetricParam(0.5));
  EXPECT_LE(g.K.norm(), 1e-13);
  EXPECT_LE(g.Vp.norm(), 1e-13);
}

TEST(Gradient, ZeroSigmaKillsVp) {
  std::mt19937_64 rng(2);
  const Matrix a = linalg::gaussian(6, 5, rng);
  const QuadraticCost f(a);
  const ManifoldPoint pt(linalg::random_stiefel(6, 2, rng), Vector::Zero(2),
                         linalg::random_stiefel(5, 2, rng));
  const auto model = f.at(factored(pt));
  const TangentVector g = riemannian_gradient(pt, *model, MetricParam(0.5));
  EXPECT_LE((g.K + a * pt.V()).norm(), 1e-14);
  EXPECT_EQ(g.Vp.norm(), 0.0);
}

TEST(Gradient, FiniteDifferencesOnCompletion) {
  GeneratorParams gp{40, 35, 4, 4, 3.0, SvSpec::uniform(0.5, 1.0), 7};
  const CompletionProblem prob = generate_problem(gp);
  const CompletionCost f(prob);
  const MetricParam metric(0.5);
  const ManifoldPoint pt = random_point(ManifoldDims(40, 35, 4), 8, {0.0, 1.0});
  const auto model = f.at(factored(pt));
  const TangentVector g = riemannian_gradient(pt, *model, metric);
  const double h = 1e-6;
  for (int k = 0; k < 20; ++k) {
    const TangentVector t = random_tangent(pt, metric, 100 + k);
    const double fd = (f.value(factored(retract_polar(pt, h * t, metric))) -
                       f.value(factored(retract_polar(pt, -h * t, metric)))) /
                      (2 * h);
    const double an = inner(pt, g, t, metric);
    EXPECT_LE(std::abs(fd - an), 1e-5 * std::max(std::abs(an), norm(pt, g, metric)));
  }
}

TEST(Gradient, MatchesProjectionOfEuclideanGradient) {
  std::mt19937_64 rng(3);
  const QuadraticCost f(linalg::gaussian(7, 6, rng));
  const MetricParam metric(0.05);
  const ManifoldPoint pt = random_point(ManifoldDims(7, 6, 2), 4, {0.0, 2.0});
  const auto model = f.at(factored(pt));
  const TangentVector g = riemannian_gradient(pt, *model, metric);
  const TangentVector oracle =
      project(pt, AmbientVector(*model->dense_gradient(), Matrix::Zero(6, 6)), metric);
  EXPECT_LE(norm(pt, g - oracle, metric), 1e-13 * norm(pt, oracle, metric));
}

TEST(Hessian, AtTargetIsScaledIdentityOnBlocks) {
  const Planted p = planted(8, 7, 3, 5);
  const QuadraticCost f(p.a);
  const MetricParam metric(0.5);
  const auto model = f.at(factored(p.pt));
  const TangentVector t = random_tangent(p.pt, metric, 6);
  const TangentVector h = hessian_vec(p.pt, t, *model, metric);
  const Vector s = sfactor(p.pt, metric);
  Vector w(3);
  for (Index i = 0; i < 3; ++i) {
    w(i) = p.pt.sigma()(i) * p.pt.sigma()(i) / s(i);
  }
  EXPECT_LE((h.K - t.K).norm(), 1e-13);
  EXPECT_LE((h.Vp - t.Vp * w.asDiagonal()).norm(), 1e-13);

  const TangentVector z = hessian_vec(p.pt, TangentVector::zero(p.pt.dims()), *model, metric);
  EXPECT_EQ(z.K.norm() + z.Vp.norm(), 0.0);
}

TEST(Hessian, QuadraticFormOracleAndSymmetry) {
  GeneratorParams gp{30, 30, 3, 3, 4.0, SvSpec::uniform(0.5, 1.0), 9};
  const CompletionProblem prob = generate_problem(gp);
  const CompletionCost f(prob);
  for (int trial = 0; trial < 10; ++trial) {
    const MetricParam metric(trial % 2 ? 5.0 : 0.05);
    const ManifoldPoint pt = random_point(ManifoldDims(30, 30, 3), trial, {0.0, 1.0});
    const auto model = f.at(factored(pt));
    const TangentVector u = random_tangent(pt, metric, 20 + trial);
    const TangentVector v = random_tangent(pt, metric, 40 + trial);
    const TangentVector hu = hessian_vec(pt, u, *model, metric);
    const TangentVector hv = hessian_vec(pt, v, *model, metric);
    EXPECT_LE(std::abs(inner(pt, u, hv, metric) - inner(pt, hu, v, metric)),
              1e-11 * (norm(pt, hu, metric) + norm(pt, hv, metric)));

    // Masked sum for <Xdot, Hess f[Xdot]>, dense M for the curvature term.
    const Matrix xdot = factored(pt, u).dense();
    double masked = 0.0;
    for (Index e = 0; e < prob.mask.nnz(); ++e) {
      const double x = xdot(prob.mask.row_indices()[e], prob.mask.col_indices()[e]);
      masked += x * x;
    }
    const Vector s = sfactor(pt, metric);
    Vector w(3);
    for (Index i = 0; i < 3; ++i) {
      w(i) = pt.sigma()(i) * pt.sigma()(i) / s(i);
    }
    const Matrix mm = Matrix::Identity(30, 30) - pt.U() * w.asDiagonal() * pt.U().transpose();
    const double curv = 2.0 * (u.K.array() * (mm * *model->dense_gradient() * u.Vp).array()).sum();
    const double q = inner(pt, u, hu, metric);
    EXPECT_LE(std::abs(q - masked - curv), 1e-11 * (std::abs(masked) + std::abs(curv)));
  }
}

TEST(Optimality, ReportAtTargetAndNormIdentity) {
  const Planted p = planted(9, 8, 2, 10);
  const QuadraticCost f(p.a);
  const MetricParam metric(0.5);
  const auto at_min = f.at(factored(p.pt));
  const OptimalityReport rep = optimality_report(p.pt, *at_min, metric);
  EXPECT_LE(rep.grad_norm, 1e-12);
  EXPECT_LE(rep.kv_residual, 1e-12);
  EXPECT_LE(rep.usigma_residual, 1e-12);

  const ManifoldPoint pt = random_point(ManifoldDims(9, 8, 2), 11, {0.0, 1.0});
  const auto model = f.at(factored(pt));
  const OptimalityReport r2 = optimality_report(pt, *model, metric);
  const TangentVector g = riemannian_gradient(pt, *model, metric);
  const Vector s = sfactor(pt, metric);
  const double vp2 = (g.Vp * s.cwiseSqrt().asDiagonal()).squaredNorm();
  EXPECT_NEAR(r2.grad_norm * r2.grad_norm, r2.kv_residual * r2.kv_residual + vp2, 1e-12);
  EXPECT_LE(r2.grad_norm, model->dense_gradient()->norm());
  EXPECT_FALSE(r2.hess_min_eig_estimate.has_value());
}

TEST(Bounds, GradFpNormPowerIterationMatchesDense) {
  std::mt19937_64 rng(12);
  const QuadraticCost f(linalg::gaussian(20, 15, rng));
  const ManifoldPoint pt = random_point(ManifoldDims(20, 15, 3), 13, {0.0, 1.0});
  const auto model = f.at(factored(pt));
  const Opaque opaque(f.at(factored(pt)));
  const double dense = grad_fp_norm(pt, *model);
  const auto [x, p] = to_dense(pt);
  EXPECT_NEAR(dense, linalg::spectral_norm(*model->dense_gradient() * p), 1e-12 * dense);
  EXPECT_NEAR(grad_fp_norm(pt, opaque), dense, 1e-4 * dense);
}

TEST(Bounds, HessianBoundSpecialCases) {
  const Planted p = planted(8, 7, 3, 14);
  const QuadraticCost f(p.a);
  const auto model = f.at(factored(p.pt));
  EXPECT_NEAR(hessian_norm_bound(p.pt, *model, MetricParam(0.5)), 1.0, 1e-12);

  // sigma_r = 0 and alpha = 1/2: the coefficient of ||grad f P|| is exactly 1.
  std::mt19937_64 rng(15);
  const QuadraticCost g(linalg::gaussian(8, 7, rng));
  Vector s(3);
  s << 1.0, 0.5, 0.0;
  const ManifoldPoint pt(linalg::random_stiefel(8, 3, rng), s, linalg::random_stiefel(7, 3, rng));
  const auto gm = g.at(factored(pt));
  EXPECT_NEAR(hessian_norm_bound(pt, *gm, MetricParam(0.5)), 1.0 + grad_fp_norm(pt, *gm), 1e-12);
}

TEST(Bounds, PowerIterationBelowBound) {
  GeneratorParams gp{40, 40, 3, 3, 5.0, SvSpec::uniform(0.5, 1.0), 16};
  const CompletionProblem prob = generate_problem(gp);
  const CompletionCost f(prob);
  for (int trial = 0; trial < 20; ++trial) {
    const MetricParam metric(trial % 3 == 0 ? 0.05 : (trial % 3 == 1 ? 0.5 : 5.0));
    const ManifoldPoint pt = random_point(ManifoldDims(40, 40, 3), 100 + trial, {0.0, 1.0});
    const auto model = f.at(factored(pt));
    EXPECT_LE(hessian_op_norm_estimate(pt, *model, metric),
              hessian_norm_bound(pt, *model, metric) + 1e-8);
  }
}

TEST(Spectrum, LanczosAndPowerIterationMatchDenseHessian) {
  std::mt19937_64 rng(17);
  Matrix w = (linalg::gaussian(6, 5, rng).array().abs() + 0.5).matrix();
  const QuadraticCost f(linalg::gaussian(6, 5, rng), w);
  for (int trial = 0; trial < 4; ++trial) {
    const MetricParam metric(trial % 2 ? 0.05 : 0.5);
    const ManifoldPoint pt = random_point(ManifoldDims(6, 5, 2), 200 + trial, {0.0, 1.0});
    const auto model = f.at(factored(pt));
    const Vector eigs = dense_hessian_eigs(pt, *model, metric);
    EXPECT_NEAR(hessian_min_eig(pt, *model, metric), eigs.minCoeff(), 1e-8);
    const double op = std::max(std::abs(eigs.minCoeff()), std::abs(eigs.maxCoeff()));
    EXPECT_NEAR(hessian_op_norm_estimate(pt, *model, metric, 2000), op, 1e-4 * op);
    const OptimalityReport rep = optimality_report(pt, *model, metric, true);
    ASSERT_TRUE(rep.hess_min_eig_estimate.has_value());
    EXPECT_NEAR(*rep.hess_min_eig_estimate, eigs.minCoeff(), 1e-8);
  }
}

// X = 0 is a saddle of 1/2 ||X - A||^2 for A != 0.
TEST(Spectrum, SaddleAtOriginHasNegativeCurvature) {
  const Planted p = planted(7, 6, 2, 18);
  const QuadraticCost f(p.a);
  std::mt19937_64 rng(19);
  const ManifoldPoint origin(linalg::random_stiefel(7, 2, rng), Vector::Zero(2),
                             linalg::random_stiefel(6, 2, rng));
  const auto model = f.at(factored(origin));
  EXPECT_LT(hessian_min_eig(origin, *model, MetricParam(0.5)), -1e-3);
}

}  // namespace
}  // namespace desing
