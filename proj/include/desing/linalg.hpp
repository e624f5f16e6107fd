#pragma once

// Small dense kernels shared by the retractions and baselines. All of them
// act on tall-skinny (or tiny square) matrices.

#include <random>

#include "desing/types.hpp"

namespace desing::linalg {

/// Thin QR of an n x k matrix (n >= k). R is k x k upper triangular.
struct ThinQR {
  Matrix Q;
  Matrix R;
};
ThinQR thin_qr(const Matrix& a);

/// Thin SVD a = U diag(s) H^T of an m x k matrix with m >= k, computed as a
/// Householder QR followed by a Jacobi SVD of the k x k triangle. Singular
/// values are returned in descending order.
struct ThinSVD {
  Matrix U;
  Vector s;
  Matrix H;
};
ThinSVD thin_svd(const Matrix& a);

/// (G)^{-1/2} for symmetric positive definite G; eigenvalues are floored at
/// 1e-300 before inversion.
Matrix inv_sqrt_spd(const Matrix& g);

/// Orthonormal basis of the orthogonal complement of the columns of q
/// (q must have orthonormal columns). Dense, O(n^3): desk scale only.
Matrix orth_complement(const Matrix& q);

/// Standard Gaussian matrix.
Matrix gaussian(Index rows, Index cols, std::mt19937_64& rng);

/// Uniformly distributed point on the Stiefel manifold St(n, k): Q factor of a
/// Gaussian matrix with the signs fixed by diag(R).
Matrix random_stiefel(Index n, Index k, std::mt19937_64& rng);

/// Spectral norm via Jacobi SVD (desk scale).
double spectral_norm(const Matrix& a);

}  // namespace desing::linalg
