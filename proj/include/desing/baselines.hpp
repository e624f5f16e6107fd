#pragma once

// Comparison parameterizations of the bounded-rank set:
//  - LR: phi(L, R) = L R^T over the Euclidean product R^{m x r} x R^{n x r};
//  - fixed rank: the embedded manifold of rank-r matrices with the Euclidean
//    metric, tangent vectors U M V^T + Up V^T + U Vp^T (U^T Up = 0, V^T Vp = 0).

#include "desing/cost_model.hpp"
#include "desing/manifold.hpp"

namespace desing {

struct LRPoint {
  Matrix L;
  Matrix R;

  FactoredMatrix factored() const { return {L, R}; }
};

struct LRTangent {
  Matrix dL;
  Matrix dR;

  LRTangent& operator+=(const LRTangent& o) {
    dL += o.dL;
    dR += o.dR;
    return *this;
  }
  LRTangent& operator-=(const LRTangent& o) {
    dL -= o.dL;
    dR -= o.dR;
    return *this;
  }
  LRTangent& operator*=(double s) {
    dL *= s;
    dR *= s;
    return *this;
  }
  friend LRTangent operator+(LRTangent a, const LRTangent& b) { return a += b; }
  friend LRTangent operator-(LRTangent a, const LRTangent& b) { return a -= b; }
  friend LRTangent operator*(double s, LRTangent a) { return a *= s; }
  friend LRTangent operator-(LRTangent a) { return a *= -1.0; }
};

/// Balanced factors L = U Sigma^{1/2}, R = V Sigma^{1/2}.
LRPoint lr_balanced(const ManifoldPoint& pt);

double lr_inner(const LRTangent& a, const LRTangent& b);
/// (grad f(L R^T) R, grad f(L R^T)^T L).
LRTangent lr_gradient(const LRPoint& pt, const LocalModel& f);
/// Second derivative of (L, R) -> f(L R^T) applied to (Ldot, Rdot):
///   (Hess f[Xdot] R + grad f Rdot,  Hess f[Xdot]^T L + grad f^T Ldot),
/// with Xdot = Ldot R^T + L Rdot^T.
LRTangent lr_hessian_vec(const LRPoint& pt, const LRTangent& t, const LocalModel& f);
LRPoint lr_retract(const LRPoint& pt, const LRTangent& t);

class FixedRankPoint {
 public:
  /// Requires orthonormal U, V and strictly positive Sigma (sorted on entry).
  FixedRankPoint(Matrix U, Vector sigma, Matrix V, double orth_tol = kDefaultOrthTol);
  explicit FixedRankPoint(const ManifoldPoint& pt);

  const Matrix& U() const { return U_; }
  const Vector& sigma() const { return sigma_; }
  const Matrix& V() const { return V_; }
  Index rank() const { return sigma_.size(); }
  FactoredMatrix factored() const { return {U_ * sigma_.asDiagonal(), V_}; }

 private:
  Matrix U_;
  Vector sigma_;
  Matrix V_;
};

struct FixedRankTangent {
  Matrix M;
  Matrix Up;
  Matrix Vp;

  FixedRankTangent& operator+=(const FixedRankTangent& o) {
    M += o.M;
    Up += o.Up;
    Vp += o.Vp;
    return *this;
  }
  FixedRankTangent& operator-=(const FixedRankTangent& o) {
    M -= o.M;
    Up -= o.Up;
    Vp -= o.Vp;
    return *this;
  }
  FixedRankTangent& operator*=(double s) {
    M *= s;
    Up *= s;
    Vp *= s;
    return *this;
  }
  friend FixedRankTangent operator+(FixedRankTangent a, const FixedRankTangent& b) { return a += b; }
  friend FixedRankTangent operator-(FixedRankTangent a, const FixedRankTangent& b) { return a -= b; }
  friend FixedRankTangent operator*(double s, FixedRankTangent a) { return a *= s; }
  friend FixedRankTangent operator-(FixedRankTangent a) { return a *= -1.0; }
};

double fixedrank_inner(const FixedRankTangent& a, const FixedRankTangent& b);
FactoredDirection fixedrank_direction(const FixedRankPoint& pt, const FixedRankTangent& t);
Matrix fixedrank_to_dense(const FixedRankPoint& pt, const FixedRankTangent& t);

/// Tangent projection from the products Z V (m x r) and Z^T U (n x r).
FixedRankTangent fixedrank_project(const FixedRankPoint& pt, const Matrix& zv,
                                   const Matrix& ztu);
/// Dense overload (desk scale).
FixedRankTangent fixedrank_project(const FixedRankPoint& pt, const Matrix& z);

FixedRankTangent fixedrank_gradient(const FixedRankPoint& pt, const LocalModel& f);
/// Exact Riemannian Hessian including the curvature terms
///   P_U^perp grad f Vp Sigma^{-1}  and  P_V^perp grad f^T Up Sigma^{-1}.
FixedRankTangent fixedrank_hessian_vec(const FixedRankPoint& pt, const FixedRankTangent& t,
                                       const LocalModel& f);
/// Rank-r truncated SVD of X + Xdot from a 2r x 2r core. Throws RankDropped if
/// sigma_r < 1e-14 sigma_1.
FixedRankPoint fixedrank_retract(const FixedRankPoint& pt, const FixedRankTangent& t);

}  // namespace desing
