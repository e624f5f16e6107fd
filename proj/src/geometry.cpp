#include "desing/geometry.hpp"

#include <random>

#include "desing/linalg.hpp"

namespace desing {

Vector sfactor(const ManifoldPoint& pt, const MetricParam& metric) {
  return (pt.sigma().array().square() + 2.0 * metric.alpha()).matrix();
}

double inner(const ManifoldPoint& pt, const TangentVector& a, const TangentVector& b,
             const MetricParam& metric) {
  const Vector s = sfactor(pt, metric);
  double acc = (a.K.array() * b.K.array()).sum();
  for (Index j = 0; j < s.size(); ++j) {
    acc += s(j) * a.Vp.col(j).dot(b.Vp.col(j));
  }
  return acc;
}

double norm(const ManifoldPoint& pt, const TangentVector& t, const MetricParam& metric) {
  return std::sqrt(std::max(0.0, inner(pt, t, t, metric)));
}

double ambient_inner(const AmbientVector& a, const AmbientVector& b,
                     const MetricParam& metric) {
  return (a.Y.array() * b.Y.array()).sum() +
         metric.alpha() * (a.Z.array() * b.Z.array()).sum();
}

TangentVector project(const ManifoldPoint& pt, const AmbientOperator& amb,
                      const MetricParam& metric) {
  const Matrix& V = pt.V();
  const Vector s_inv = sfactor(pt, metric).cwiseInverse();

  TangentVector out;
  out.K = amb.y_times(V);
  Matrix w = amb.yt_times(pt.U_sigma());
  Matrix zv = amb.z_times(V);
  if (zv.size() != 0) {
    w.noalias() -= (2.0 * metric.alpha()) * zv;
  }
  w.noalias() -= V * (V.transpose() * w);
  out.Vp = w * s_inv.asDiagonal();
  return out;
}

TangentVector project(const ManifoldPoint& pt, const AmbientVector& amb,
                      const MetricParam& metric) {
  const Index n = pt.dims().n;
  const Matrix& V = pt.V();
  const Matrix P = Matrix::Identity(n, n) - V * V.transpose();
  const Vector s = sfactor(pt, metric);
  const Matrix s_inv = s.cwiseInverse().asDiagonal();

  TangentVector out;
  out.K = amb.Y * V;
  out.Vp = P * (amb.Y.transpose() * pt.U() * pt.sigma().asDiagonal() -
                2.0 * metric.alpha() * amb.Z * V) *
           s_inv;
  return out;
}

AmbientVector normal_sample(const ManifoldPoint& pt, const MetricParam& metric,
                            std::uint64_t seed) {
  const ManifoldDims& d = pt.dims();
  std::mt19937_64 rng(seed);
  const Matrix& U = pt.U();
  const Matrix& V = pt.V();
  const Matrix Uperp = linalg::orth_complement(U);
  const Matrix Vperp = linalg::orth_complement(V);

  const Matrix A = linalg::gaussian(d.r, d.n - d.r, rng);
  const Matrix B = linalg::gaussian(d.m - d.r, d.n - d.r, rng);
  Matrix C = linalg::gaussian(d.r, d.r, rng);
  C = 0.5 * (C + C.transpose()).eval();
  Matrix E = linalg::gaussian(d.n - d.r, d.n - d.r, rng);
  E = 0.5 * (E + E.transpose()).eval();
  const Matrix D = (pt.sigma() / (2.0 * metric.alpha())).asDiagonal() * A;

  AmbientVector out;
  out.Y = U * A * Vperp.transpose() + Uperp * B * Vperp.transpose();
  Matrix vdv = V * D * Vperp.transpose();
  out.Z = V * C * V.transpose() + vdv + vdv.transpose() +
          Vperp * E * Vperp.transpose();
  return out;
}

}  // namespace desing
