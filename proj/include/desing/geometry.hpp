#pragma once

// The alpha-metric on the desingularization: inner products, norms and the
// orthogonal projection from the embedding space onto tangent spaces.

#include <cstdint>

#include "desing/manifold.hpp"

namespace desing {

/// Diagonal of S(alpha) = 2 alpha I + Sigma^2. Every entry is >= 2 alpha.
Vector sfactor(const ManifoldPoint& pt, const MetricParam& metric);

/// <K1, K2> + <Vp1, Vp2 S(alpha)>.  O((m + n) r).
double inner(const ManifoldPoint& pt, const TangentVector& a, const TangentVector& b,
             const MetricParam& metric);

double norm(const ManifoldPoint& pt, const TangentVector& t, const MetricParam& metric);

/// <(Y1, Z1), (Y2, Z2)> = <Y1, Y2> + alpha <Z1, Z2> on the embedding space.
double ambient_inner(const AmbientVector& a, const AmbientVector& b,
                     const MetricParam& metric);

/// Access to an ambient vector (Y, Z) through the products the projection
/// needs, so that structured Y (e.g. sparse) never has to be formed densely.
class AmbientOperator {
 public:
  virtual ~AmbientOperator() = default;
  /// Y * a for a with n rows.
  virtual Matrix y_times(const Matrix& a) const = 0;
  /// Y^T * b for b with m rows.
  virtual Matrix yt_times(const Matrix& b) const = 0;
  /// Z * a, or an empty matrix when Z = 0.
  virtual Matrix z_times(const Matrix& a) const = 0;
};

/// Dense adapter over an AmbientVector.
class DenseAmbient final : public AmbientOperator {
 public:
  explicit DenseAmbient(const AmbientVector& amb) : amb_(amb) {}
  Matrix y_times(const Matrix& a) const override { return amb_.Y * a; }
  Matrix yt_times(const Matrix& b) const override { return amb_.Y.transpose() * b; }
  Matrix z_times(const Matrix& a) const override { return amb_.Z * a; }

 private:
  const AmbientVector& amb_;
};

/// Orthogonal projection onto the tangent space, structured path:
///   K = Y V,  Vp = P (Y^T U Sigma - 2 alpha Z V) S(alpha)^{-1},
/// with P w evaluated as w - V (V^T w).  Cost c_yz + O(n r^2).
TangentVector project(const ManifoldPoint& pt, const AmbientOperator& amb,
                      const MetricParam& metric);

/// Dense reference path: forms P = I - V V^T explicitly. Desk scale only.
TangentVector project(const ManifoldPoint& pt, const AmbientVector& amb,
                      const MetricParam& metric);

/// Random element of the normal space at pt,
///   G = U A Vperp^T + Uperp B Vperp^T,
///   H = V C V^T + Vperp D^T V^T + V D Vperp^T + Vperp E Vperp^T,
/// with C, E symmetric and Sigma A = 2 alpha D (so D = Sigma A / (2 alpha)).
/// Desk scale only.
AmbientVector normal_sample(const ManifoldPoint& pt, const MetricParam& metric,
                            std::uint64_t seed);

}  // namespace desing
