#include "desing/retraction.hpp"

#include <string>

#include "desing/geometry.hpp"
#include "desing/linalg.hpp"

namespace desing {

namespace {

// Representation of ((X + Xdot) Q Q^T, I - Q Q^T) for Q with orthonormal
// columns: W = (U Sigma + K)(V^T Q) + U Sigma (Vp^T Q) = Ubar Sbar H^T.
ManifoldPoint lift_subspace(const ManifoldPoint& pt, const TangentVector& t,
                            const Matrix& Q) {
  const Matrix us = pt.U_sigma();
  Matrix W = (us + t.K) * (pt.V().transpose() * Q);
  W.noalias() += us * (t.Vp.transpose() * Q);
  linalg::ThinSVD svd = linalg::thin_svd(W);
  return ManifoldPoint(std::move(svd.U), std::move(svd.s), Q * svd.H);
}

}  // namespace

std::string_view to_string(RetractionKind kind) {
  switch (kind) {
    case RetractionKind::QFactor:
      return "qfactor";
    case RetractionKind::MetricProjection:
      return "metric_projection";
    case RetractionKind::Polar:
      return "polar";
  }
  return "unknown";
}

RetractionKind parse_retraction_kind(std::string_view name) {
  if (name == "qfactor") return RetractionKind::QFactor;
  if (name == "metric_projection") return RetractionKind::MetricProjection;
  if (name == "polar") return RetractionKind::Polar;
  throw InvalidArgument("unknown retraction '" + std::string(name) + "'");
}

ManifoldPoint retract_qfactor(const ManifoldPoint& pt, const TangentVector& t) {
  // V^T (V + Vp) = I, so V + Vp always has full column rank.
  const Matrix Q = linalg::thin_qr(pt.V() + t.Vp).Q;
  return lift_subspace(pt, t, Q);
}

MetricProjectionResult retract_metric_projection(const ManifoldPoint& pt,
                                                 const TangentVector& t,
                                                 const MetricParam& metric) {
  const Index n = pt.dims().n;
  const Index r = pt.dims().r;
  const double two_alpha = 2.0 * metric.alpha();
  const Matrix& U = pt.U();
  const Matrix& V = pt.V();
  const Vector& s = pt.sigma();

  Matrix VVp(n, 2 * r);
  VVp << V, t.Vp;
  const linalg::ThinQR qr = linalg::thin_qr(VVp);

  // D from C = (X + Xdot)^T (X + Xdot) + 2 alpha (I - P - Pdot) = [V Vp] D [V Vp]^T.
  const Matrix s2 = s.array().square().matrix().asDiagonal();
  const Matrix ktus = t.K.transpose() * U * s.asDiagonal();  // K^T U Sigma
  const Matrix shift = s2 + two_alpha * Matrix::Identity(r, r);
  Matrix D(2 * r, 2 * r);
  D.topLeftCorner(r, r) = shift + ktus.transpose() + ktus + t.K.transpose() * t.K;
  D.topRightCorner(r, r) = shift + ktus;
  D.bottomLeftCorner(r, r) = shift + ktus.transpose();
  D.bottomRightCorner(r, r) = s2;

  Matrix RDRt = qr.R * D * qr.R.transpose();
  RDRt = 0.5 * (RDRt + RDRt.transpose()).eval();
  Eigen::SelfAdjointEigenSolver<Matrix> eig(RDRt);
  const Vector& lam = eig.eigenvalues();  // ascending
  // Top r eigenvectors, largest first.
  const Matrix Utilde = eig.eigenvectors().rightCols(r).rowwise().reverse();

  const double lam1 = lam(2 * r - 1);
  const double gap = lam(r) - lam(r - 1);  // lambda_r - lambda_{r+1} in descending order
  const double scale = std::abs(lam1) > 0.0 ? std::abs(lam1) : 1.0;

  const Matrix Vtilde = qr.Q * Utilde;
  MetricProjectionResult out{lift_subspace(pt, t, Vtilde), gap / scale, false};
  out.eig_gap_warning = gap < kEigGapThreshold * scale;
  return out;
}

ManifoldPoint retract_polar(const ManifoldPoint& pt, const TangentVector& t,
                            const MetricParam& metric) {
  const Vector s_inv = sfactor(pt, metric).cwiseInverse();
  // I - K^T U Sigma S^{-1}
  Matrix inner_factor = -(t.K.transpose() * pt.U_sigma()) * s_inv.asDiagonal();
  inner_factor.diagonal().array() += 1.0;
  const Matrix Z = pt.V() + t.Vp * inner_factor;
  const Matrix Q = Z * linalg::inv_sqrt_spd(Z.transpose() * Z);
  return lift_subspace(pt, t, Q);
}

RetractionOutcome retract(const ManifoldPoint& pt, const TangentVector& t,
                          const MetricParam& metric, RetractionKind kind,
                          bool fallback_to_polar) {
  switch (kind) {
    case RetractionKind::QFactor:
      return {retract_qfactor(pt, t), false, false};
    case RetractionKind::Polar:
      return {retract_polar(pt, t, metric), false, false};
    case RetractionKind::MetricProjection: {
      MetricProjectionResult res = retract_metric_projection(pt, t, metric);
      if (res.eig_gap_warning && fallback_to_polar) {
        return {retract_polar(pt, t, metric), true, true};
      }
      return {std::move(res.point), res.eig_gap_warning, false};
    }
  }
  throw InvalidArgument("unknown retraction kind");
}

double intrinsic_acceleration_residual(const ManifoldPoint& pt, const TangentVector& t,
                                       const MetricParam& metric, RetractionKind kind,
                                       double h) {
  auto curve = [&](double s) {
    return to_dense(retract(pt, s * t, metric, kind, false).point);
  };
  const auto plus = curve(h);
  const auto mid = to_dense(pt);
  const auto minus = curve(-h);
  const double inv_h2 = 1.0 / (h * h);
  Matrix acc_x = (plus.first - 2.0 * mid.first + minus.first) * inv_h2;
  Matrix acc_p = (plus.second - 2.0 * mid.second + minus.second) * inv_h2;
  acc_p = 0.5 * (acc_p + acc_p.transpose()).eval();
  AmbientVector acc;
  acc.Y = std::move(acc_x);
  acc.Z = std::move(acc_p);
  return norm(pt, project(pt, acc, metric), metric);
}

}  // namespace desing
