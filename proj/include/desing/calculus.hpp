#pragma once

// First- and second-order calculus of g = f o phi on the desingularization,
// where phi(X, P) = X.

#include <cstdint>
#include <optional>

#include "desing/cost_model.hpp"
#include "desing/geometry.hpp"

namespace desing {

/// (U Sigma, V).
FactoredMatrix factored(const ManifoldPoint& pt);
/// Xdot = K V^T + (U Sigma) Vp^T in factored form.
FactoredDirection factored(const ManifoldPoint& pt, const TangentVector& t);

/// K = grad f(X) V,  Vp = P grad f(X)^T U Sigma S(alpha)^{-1}.
TangentVector riemannian_gradient(const ManifoldPoint& pt, const LocalModel& f,
                                  const MetricParam& metric);

/// Riemannian Hessian-vector product:
///   Kbar  = Hess f(X)[Xdot] V + M grad f(X) Vp,
///   Vpbar = P (Hess f(X)[Xdot]^T U Sigma + grad f(X)^T M K) S(alpha)^{-1},
/// with M = I - U Sigma^2 S(alpha)^{-1} U^T applied as a rank-r correction.
TangentVector hessian_vec(const ManifoldPoint& pt, const TangentVector& t,
                          const LocalModel& f, const MetricParam& metric);

struct OptimalityReport {
  double grad_norm = 0.0;
  /// ||grad f(X) V||_F
  double kv_residual = 0.0;
  /// ||grad f(X)^T U Sigma||_F
  double usigma_residual = 0.0;
  /// Smallest Riemannian Hessian eigenvalue (Lanczos), when requested.
  std::optional<double> hess_min_eig_estimate;
};

OptimalityReport optimality_report(const ManifoldPoint& pt, const LocalModel& f,
                                   const MetricParam& metric,
                                   bool estimate_hessian_eig = false);

/// ||grad f(X) P||_2. Dense SVD when the model exposes a dense gradient,
/// otherwise power iteration on P grad f^T grad f P (50 iterations, rel. tol 1e-6).
double grad_fp_norm(const ManifoldPoint& pt, const LocalModel& f,
                    std::uint64_t seed = 7);

/// ||Hess f(X)||_op + (2 alpha + sigma_r(X)^2)^{-1/2} ||grad f(X) P||_2, an
/// upper bound on the operator norm of the Riemannian Hessian.
double hessian_norm_bound(const ManifoldPoint& pt, const LocalModel& f,
                          const MetricParam& metric);

/// Smallest eigenvalue of the Riemannian Hessian by Lanczos with full
/// reorthogonalization in the alpha-metric. Desk scale.
double hessian_min_eig(const ManifoldPoint& pt, const LocalModel& f,
                       const MetricParam& metric, Index max_iters = 200,
                       std::uint64_t seed = 11);

/// Largest |eigenvalue| of the Riemannian Hessian by power iteration.
double hessian_op_norm_estimate(const ManifoldPoint& pt, const LocalModel& f,
                                const MetricParam& metric, int iters = 200,
                                std::uint64_t seed = 13);

}  // namespace desing
