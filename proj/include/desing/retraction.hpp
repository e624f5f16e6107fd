#pragma once

#include <string_view>

#include "desing/manifold.hpp"

namespace desing {

enum class RetractionKind { QFactor, MetricProjection, Polar };

std::string_view to_string(RetractionKind kind);
/// Accepts "qfactor", "metric_projection", "polar".
RetractionKind parse_retraction_kind(std::string_view name);

/// Q-factor retraction: Q from the thin QR of V + Vp, then the thin SVD of
/// (X + Xdot) Q assembled from the factors.
ManifoldPoint retract_qfactor(const ManifoldPoint& pt, const TangentVector& t);

struct MetricProjectionResult {
  ManifoldPoint point;
  /// Relative gap (lambda_r - lambda_{r+1}) / lambda_1 of R D R^T.
  double relative_gap = 0.0;
  /// Set when the gap is below the non-uniqueness threshold; the returned
  /// point is still a minimizer but not the unique one.
  bool eig_gap_warning = false;
};

inline constexpr double kEigGapThreshold = 1e-12;

/// Nearest point of M to (X + Xdot, P + Pdot) in the alpha-metric.
MetricProjectionResult retract_metric_projection(const ManifoldPoint& pt,
                                                 const TangentVector& t,
                                                 const MetricParam& metric);

/// Second-order retraction defined on the whole tangent bundle:
///   Z = V + Vp (I - K^T U Sigma S(alpha)^{-1}),  Q = Z (Z^T Z)^{-1/2}.
ManifoldPoint retract_polar(const ManifoldPoint& pt, const TangentVector& t,
                            const MetricParam& metric);

struct RetractionOutcome {
  ManifoldPoint point;
  bool eig_gap_warning = false;
  /// MetricProjection was replaced by Polar because of an eigen-gap warning.
  bool fell_back = false;
};

/// Dispatches on kind. With fallback_to_polar, a MetricProjection call that
/// raises the eigen-gap warning is recomputed with the polar retraction.
RetractionOutcome retract(const ManifoldPoint& pt, const TangentVector& t,
                          const MetricParam& metric, RetractionKind kind,
                          bool fallback_to_polar = true);

/// Norm of the tangent projection of the second derivative at s = 0 of
/// s -> retract(pt, s t), by central differences with step h. Desk scale.
double intrinsic_acceleration_residual(const ManifoldPoint& pt, const TangentVector& t,
                                       const MetricParam& metric, RetractionKind kind,
                                       double h = 1e-4);

}  // namespace desing
