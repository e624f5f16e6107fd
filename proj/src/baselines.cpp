#include "desing/baselines.hpp"

#include <cmath>
#include <sstream>

#include "desing/linalg.hpp"

namespace desing {

LRPoint lr_balanced(const ManifoldPoint& pt) {
  const Vector root = pt.sigma().cwiseSqrt();
  return {pt.U() * root.asDiagonal(), pt.V() * root.asDiagonal()};
}

double lr_inner(const LRTangent& a, const LRTangent& b) {
  return (a.dL.array() * b.dL.array()).sum() + (a.dR.array() * b.dR.array()).sum();
}

LRTangent lr_gradient(const LRPoint& pt, const LocalModel& f) {
  return {f.grad_right(pt.R), f.grad_left(pt.L)};
}

LRTangent lr_hessian_vec(const LRPoint& pt, const LRTangent& t, const LocalModel& f) {
  const FactoredDirection dir{t.dL, pt.R, pt.L, t.dR};
  auto [hr, hl] = f.hess_products(dir, pt.R, pt.L);
  hr += f.grad_right(t.dR);
  hl += f.grad_left(t.dL);
  return {std::move(hr), std::move(hl)};
}

LRPoint lr_retract(const LRPoint& pt, const LRTangent& t) {
  return {pt.L + t.dL, pt.R + t.dR};
}

FixedRankPoint::FixedRankPoint(Matrix U, Vector sigma, Matrix V, double orth_tol) {
  // Reuse the orthonormality checks and descending sort of ManifoldPoint.
  ManifoldPoint checked(std::move(U), std::move(sigma), std::move(V), orth_tol);
  if (!(checked.sigma().array() > 0.0).all()) {
    throw RankDropped("fixed-rank point needs strictly positive singular values");
  }
  U_ = checked.U();
  sigma_ = checked.sigma();
  V_ = checked.V();
}

FixedRankPoint::FixedRankPoint(const ManifoldPoint& pt)
    : FixedRankPoint(pt.U(), pt.sigma(), pt.V()) {}

double fixedrank_inner(const FixedRankTangent& a, const FixedRankTangent& b) {
  return (a.M.array() * b.M.array()).sum() + (a.Up.array() * b.Up.array()).sum() +
         (a.Vp.array() * b.Vp.array()).sum();
}

FactoredDirection fixedrank_direction(const FixedRankPoint& pt, const FixedRankTangent& t) {
  return {pt.U() * t.M + t.Up, pt.V(), pt.U(), t.Vp};
}

Matrix fixedrank_to_dense(const FixedRankPoint& pt, const FixedRankTangent& t) {
  return fixedrank_direction(pt, t).dense();
}

FixedRankTangent fixedrank_project(const FixedRankPoint& pt, const Matrix& zv,
                                   const Matrix& ztu) {
  FixedRankTangent out;
  out.M = pt.U().transpose() * zv;
  out.Up = zv - pt.U() * out.M;
  out.Vp = ztu - pt.V() * out.M.transpose();
  return out;
}

FixedRankTangent fixedrank_project(const FixedRankPoint& pt, const Matrix& z) {
  return fixedrank_project(pt, z * pt.V(), z.transpose() * pt.U());
}

FixedRankTangent fixedrank_gradient(const FixedRankPoint& pt, const LocalModel& f) {
  return fixedrank_project(pt, f.grad_right(pt.V()), f.grad_left(pt.U()));
}

FixedRankTangent fixedrank_hessian_vec(const FixedRankPoint& pt, const FixedRankTangent& t,
                                       const LocalModel& f) {
  auto [hv, htu] = f.hess_products(fixedrank_direction(pt, t), pt.V(), pt.U());
  FixedRankTangent out = fixedrank_project(pt, hv, htu);
  const Vector s_inv = pt.sigma().cwiseInverse();
  Matrix cu = f.grad_right(t.Vp) * s_inv.asDiagonal();
  cu -= pt.U() * (pt.U().transpose() * cu);
  Matrix cv = f.grad_left(t.Up) * s_inv.asDiagonal();
  cv -= pt.V() * (pt.V().transpose() * cv);
  out.Up += cu;
  out.Vp += cv;
  return out;
}

FixedRankPoint fixedrank_retract(const FixedRankPoint& pt, const FixedRankTangent& t) {
  const Index r = pt.rank();
  const Index m = pt.U().rows();
  const Index n = pt.V().rows();
  // X + Xdot = [U Up] B [V Vp]^T with B = [[Sigma + M, I], [I, 0]].
  Matrix left(m, 2 * r);
  left << pt.U(), t.Up;
  Matrix right(n, 2 * r);
  right << pt.V(), t.Vp;
  const linalg::ThinQR ql = linalg::thin_qr(left);
  const linalg::ThinQR qr = linalg::thin_qr(right);
  Matrix B = Matrix::Zero(2 * r, 2 * r);
  B.topLeftCorner(r, r) = t.M;
  B.topLeftCorner(r, r).diagonal() += pt.sigma();
  B.topRightCorner(r, r).setIdentity();
  B.bottomLeftCorner(r, r).setIdentity();
  Eigen::JacobiSVD<Matrix> svd(ql.R * B * qr.R.transpose(),
                               Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vector s = svd.singularValues().head(r);
  if (!(s(r - 1) >= 1e-14 * s(0)) || s(0) == 0.0) {
    std::ostringstream os;
    os << "fixed-rank retraction dropped rank: sigma_r / sigma_1 = " << s(r - 1) / s(0);
    throw RankDropped(os.str());
  }
  return FixedRankPoint(ql.Q * svd.matrixU().leftCols(r), s,
                        qr.Q * svd.matrixV().leftCols(r));
}

}  // namespace desing
