#pragma once

// Contract between a Euclidean cost f : R^{m x n} -> R and the lifted
// geometries. The solvers never form grad f(X) or Hess f(X)[Xdot] densely;
// they only ask for the products below (the c_g and c_h costs).

#include <memory>
#include <optional>
#include <utility>

#include "desing/types.hpp"

namespace desing {

/// X = left * right^T.
struct FactoredMatrix {
  Matrix left;
  Matrix right;

  Index rows() const { return left.rows(); }
  Index cols() const { return right.rows(); }
  Matrix dense() const { return left * right.transpose(); }
};

/// Xdot = a1 b1^T + a2 b2^T. Every geometry here produces directions of this
/// shape (desingularization: K V^T + U Sigma Vp^T; LR: Ldot R^T + L Rdot^T;
/// fixed rank: (U M + Up) V^T + U Vp^T).
struct FactoredDirection {
  Matrix a1;
  Matrix b1;
  Matrix a2;
  Matrix b2;

  Matrix dense() const { return a1 * b1.transpose() + a2 * b2.transpose(); }
};

/// Derivative information of f at a fixed X. Implementations may cache
/// whatever they need (e.g. the sparse residual).
class LocalModel {
 public:
  virtual ~LocalModel() = default;

  virtual double value() const = 0;
  /// grad f(X) * a.
  virtual Matrix grad_right(const Matrix& a) const = 0;
  /// grad f(X)^T * b.
  virtual Matrix grad_left(const Matrix& b) const = 0;
  /// Hess f(X)[Xdot] * a.
  virtual Matrix hess_right(const FactoredDirection& d, const Matrix& a) const = 0;
  /// Hess f(X)[Xdot]^T * b.
  virtual Matrix hess_left(const FactoredDirection& d, const Matrix& b) const = 0;
  /// Both Hessian products; override when they share work.
  virtual std::pair<Matrix, Matrix> hess_products(const FactoredDirection& d,
                                                  const Matrix& a,
                                                  const Matrix& b) const {
    return {hess_right(d, a), hess_left(d, b)};
  }
  /// ||Hess f(X)||_op (an upper estimate is acceptable).
  virtual double hessian_op_norm() const = 0;
  /// Dense grad f(X) when the model is small enough to afford it.
  virtual std::optional<Matrix> dense_gradient() const { return std::nullopt; }
};

class CostModel {
 public:
  virtual ~CostModel() = default;
  virtual Index rows() const = 0;
  virtual Index cols() const = 0;
  virtual double value(const FactoredMatrix& x) const = 0;
  virtual std::unique_ptr<LocalModel> at(const FactoredMatrix& x) const = 0;
};

}  // namespace desing
