#pragma once

// Masked matrix completion f(X) = 1/2 ||(X - A) .* Omega||_F^2 and the
// synthetic problem generator.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "desing/cost_model.hpp"
#include "desing/kernels.hpp"

namespace desing {

/// Distribution of the target singular values.
struct SvSpec {
  enum class Kind : std::uint32_t { Uniform = 0, ExpDecay = 1 };
  Kind kind = Kind::Uniform;
  /// Uniform: [a, b]. ExpDecay: sigma_i = a^{i-1}, b unused.
  double a = 0.5;
  double b = 1.0;

  static SvSpec uniform(double lo, double hi) { return {Kind::Uniform, lo, hi}; }
  static SvSpec exp_decay(double rho) { return {Kind::ExpDecay, rho, 0.0}; }

  /// "uniform:lo,hi" or "expdecay:rho".
  static SvSpec parse(const std::string& text);
  std::string to_string() const;

  friend bool operator==(const SvSpec&, const SvSpec&) = default;
};

struct GeneratorParams {
  Index m = 0;
  Index n = 0;
  Index r_star = 0;
  /// Optimization rank; the observed count is round(oversampling (m + n - r) r).
  Index r = 0;
  double oversampling = 5.0;
  SvSpec sv;
  std::uint64_t seed = 0;
};

struct CompletionProblem {
  GeneratorParams params;
  SparseMask mask;
  /// A-values at the masked entries, in mask order.
  Vector observed;
  /// Target A = truth.left truth.right^T; present for generated problems,
  /// absent after loading from disk.
  std::optional<FactoredMatrix> truth;
};

/// round(oversampling (m + n - r) r).
Index target_nnz(Index m, Index n, Index r, double oversampling);

/// Throws OversampleTooLarge when the observed count exceeds m n.
CompletionProblem generate_problem(const GeneratorParams& params);

/// Binary container; layout documented in docs/problem_format.md.
void save_problem(const CompletionProblem& problem, const std::filesystem::path& path);
CompletionProblem load_problem(const std::filesystem::path& path);

enum class KernelMode { Parallel, Serial };

class CompletionCost final : public CostModel {
 public:
  explicit CompletionCost(const CompletionProblem& problem,
                          KernelMode mode = KernelMode::Parallel);

  Index rows() const override { return problem_.mask.rows(); }
  Index cols() const override { return problem_.mask.cols(); }
  double value(const FactoredMatrix& x) const override;
  std::unique_ptr<LocalModel> at(const FactoredMatrix& x) const override;

  const CompletionProblem& problem() const { return problem_; }
  KernelMode mode() const { return mode_; }

 private:
  const CompletionProblem& problem_;
  KernelMode mode_;
};

/// f(X) = 1/2 sum_ij w_ij (x_ij - a_ij)^2 with dense A and positive weights W.
/// Desk-scale test cost; W = 1 gives 1/2 ||X - A||_F^2.
class QuadraticCost final : public CostModel {
 public:
  explicit QuadraticCost(Matrix target);
  QuadraticCost(Matrix target, Matrix weights);

  Index rows() const override { return target_.rows(); }
  Index cols() const override { return target_.cols(); }
  double value(const FactoredMatrix& x) const override;
  std::unique_ptr<LocalModel> at(const FactoredMatrix& x) const override;

  const Matrix& target() const { return target_; }
  const Matrix& weights() const { return weights_; }

 private:
  Matrix target_;
  Matrix weights_;
};

}  // namespace desing
