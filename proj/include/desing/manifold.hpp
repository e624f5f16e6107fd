#pragma once

// Points and tangent vectors of the desingularization
//
//   M = { (X, P) : X in R^{m x n}, P orthogonal projector of rank n - r, XP = 0 }
//
// A point is stored as a triplet (U, Sigma, V) with X = U diag(Sigma) V^T and
// P = I - V V^T. A tangent vector at that point is stored as a pair (K, Vp)
// with V^T Vp = 0, encoding
//
//   Xdot = K V^T + U Sigma Vp^T,   Pdot = -Vp V^T - V Vp^T.
//
// Full m x n or n x n matrices are only formed by the desk-scale helpers
// (from_dense, to_dense, tangent_to_ambient).

#include <cstdint>
#include <utility>

#include "desing/types.hpp"

namespace desing {

inline constexpr double kDefaultOrthTol = 1e-10;

struct ManifoldDims {
  Index m = 0;
  Index n = 0;
  Index r = 0;

  ManifoldDims() = default;
  /// Throws InvalidArgument unless 1 <= r < min(m, n).
  ManifoldDims(Index rows, Index cols, Index rank);

  /// (m + n - r) r.
  Index manifold_dim() const { return (m + n - r) * r; }

  friend bool operator==(const ManifoldDims&, const ManifoldDims&) = default;
};

/// Metric parameter alpha > 0 of the inner product <Y1,Y2> + alpha <Z1,Z2>.
class MetricParam {
 public:
  explicit MetricParam(double alpha);
  double alpha() const { return alpha_; }

 private:
  double alpha_;
};

class ManifoldPoint {
 public:
  /// Validating constructor; see from_factors.
  ManifoldPoint(Matrix U, Vector sigma, Matrix V,
                double orth_tol = kDefaultOrthTol);

  const ManifoldDims& dims() const { return dims_; }
  const Matrix& U() const { return U_; }
  const Vector& sigma() const { return sigma_; }
  const Matrix& V() const { return V_; }

  /// U diag(Sigma), the left factor of X = (U Sigma) V^T.
  Matrix U_sigma() const { return U_ * sigma_.asDiagonal(); }

 private:
  ManifoldDims dims_;
  Matrix U_;
  Vector sigma_;
  Matrix V_;
};

struct TangentVector {
  Matrix K;
  Matrix Vp;

  static TangentVector zero(const ManifoldDims& d) {
    return {Matrix::Zero(d.m, d.r), Matrix::Zero(d.n, d.r)};
  }

  TangentVector& operator+=(const TangentVector& o) {
    K += o.K;
    Vp += o.Vp;
    return *this;
  }
  TangentVector& operator-=(const TangentVector& o) {
    K -= o.K;
    Vp -= o.Vp;
    return *this;
  }
  TangentVector& operator*=(double s) {
    K *= s;
    Vp *= s;
    return *this;
  }
  friend TangentVector operator+(TangentVector a, const TangentVector& b) { return a += b; }
  friend TangentVector operator-(TangentVector a, const TangentVector& b) { return a -= b; }
  friend TangentVector operator*(double s, TangentVector a) { return a *= s; }
  friend TangentVector operator-(TangentVector a) { return a *= -1.0; }
};

/// Element (Y, Z) of the embedding space R^{m x n} x Sym(n).
struct AmbientVector {
  Matrix Y;
  Matrix Z;

  AmbientVector() = default;
  /// Throws InvalidArgument if Z is not symmetric within orth_tol.
  AmbientVector(Matrix y, Matrix z, double orth_tol = kDefaultOrthTol);
};

/// Builds a point from factors. Sigma is re-sorted in descending order with
/// the matching column permutation of U and V; entries in [-orth_tol, 0) are
/// clamped to zero.
ManifoldPoint from_factors(const Matrix& U, const Vector& sigma, const Matrix& V,
                           double orth_tol = kDefaultOrthTol);

/// Desk-scale constructor from the dense pair (X, P) with rank(P) = n - r.
ManifoldPoint from_dense(const Matrix& X, const Matrix& P, Index r,
                         double orth_tol = kDefaultOrthTol);

/// Dense (X, P). Desk scale only.
std::pair<Matrix, Matrix> to_dense(const ManifoldPoint& pt);

/// Builds a tangent vector, projecting Vp <- (I - V V^T) Vp. When the removed
/// component exceeds orth_tol the global drift counter is incremented.
TangentVector tangent_from_parts(const ManifoldPoint& pt, Matrix K, Matrix Vp,
                                 double orth_tol = kDefaultOrthTol);

/// Dense image (Xdot, Pdot) of a tangent vector.
AmbientVector tangent_to_ambient(const ManifoldPoint& pt, const TangentVector& t);

/// Number of times tangent_from_parts removed more than orth_tol of drift.
std::uint64_t tangent_drift_count();
void reset_tangent_drift_count();

struct SigmaRange {
  double lo = 0.0;
  double hi = 1e-3;
};

/// U, V uniform on their Stiefel manifolds; Sigma entries i.i.d. uniform in
/// the given range (default [0, 1e-3]).
ManifoldPoint random_point(const ManifoldDims& dims, std::uint64_t seed,
                           SigmaRange range = {});

/// Gaussian (K, Vp), Vp cleaned, normalized to unit norm in the alpha-metric.
TangentVector random_tangent(const ManifoldPoint& pt, const MetricParam& metric,
                             std::uint64_t seed);

/// Distances ||X1 - X2||_F and ||P1 - P2||_F computed from the factors,
/// without forming m x n matrices.
struct PointDistance {
  double x = 0.0;
  double p = 0.0;
};
PointDistance distance(const ManifoldPoint& a, const ManifoldPoint& b);

}  // namespace desing
