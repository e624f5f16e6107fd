#include "desing/linalg.hpp"

#include <algorithm>
#include <cmath>

namespace desing::linalg {

ThinQR thin_qr(const Matrix& a) {
  const Index n = a.rows();
  const Index k = a.cols();
  Eigen::HouseholderQR<Matrix> qr(a);
  ThinQR out;
  out.Q = qr.householderQ() * Matrix::Identity(n, k);
  out.R = qr.matrixQR().topRows(k).triangularView<Eigen::Upper>();
  return out;
}

ThinSVD thin_svd(const Matrix& a) {
  ThinQR qr = thin_qr(a);
  Eigen::JacobiSVD<Matrix> svd(qr.R, Eigen::ComputeFullU | Eigen::ComputeFullV);
  ThinSVD out;
  out.U = qr.Q * svd.matrixU();
  out.s = svd.singularValues();
  out.H = svd.matrixV();
  return out;
}

Matrix inv_sqrt_spd(const Matrix& g) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g);
  Vector d = eig.eigenvalues().unaryExpr(
      [](double v) { return 1.0 / std::sqrt(std::max(v, 1e-300)); });
  const Matrix& w = eig.eigenvectors();
  return w * d.asDiagonal() * w.transpose();
}

Matrix orth_complement(const Matrix& q) {
  const Index n = q.rows();
  const Index k = q.cols();
  Matrix full = Eigen::HouseholderQR<Matrix>(q).householderQ();
  return full.rightCols(n - k);
}

Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(rows, cols);
  // Fill column-major so the stream order is independent of Eigen internals.
  for (Index j = 0; j < cols; ++j) {
    for (Index i = 0; i < rows; ++i) {
      g(i, j) = normal(rng);
    }
  }
  return g;
}

Matrix random_stiefel(Index n, Index k, std::mt19937_64& rng) {
  ThinQR qr = thin_qr(gaussian(n, k, rng));
  for (Index j = 0; j < k; ++j) {
    if (qr.R(j, j) < 0.0) {
      qr.Q.col(j) *= -1.0;
    }
  }
  return qr.Q;
}

double spectral_norm(const Matrix& a) {
  if (a.size() == 0) {
    return 0.0;
  }
  Eigen::JacobiSVD<Matrix> svd(a);
  return svd.singularValues()(0);
}

}  // namespace desing::linalg
