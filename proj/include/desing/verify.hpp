#pragma once

// Property suites shared by the `verify` subcommand and the acceptance
// binary. Each check compares against an independent oracle (finite
// differences, dense least squares, ambient inner products) and reports the
// worst residual it saw.

#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

namespace desing {

struct CheckResult {
  std::string name;
  bool passed = false;
  /// Worst observed value of the checked quantity.
  double measured = 0.0;
  double threshold = 0.0;
  /// "<=" when measured must not exceed threshold, ">=" otherwise.
  std::string relation = "<=";
  std::string detail;
};

using Suite = std::vector<CheckResult>;

/// Inner product vs ambient oracle, projection idempotence and Pythagoras,
/// normal-space annihilation, structured vs dense projection (m, n <= 12).
Suite verify_geometry(std::uint64_t seed = 1);
/// Retraction axioms, intrinsic acceleration, metric-projection optimality.
Suite verify_retractions(std::uint64_t seed = 2);
/// FD gradients, Hessian symmetry, quadratic-form oracle, Taylor slope
/// (m = n = 50, r = 5).
Suite verify_calculus(std::uint64_t seed = 3);
/// Gradient and Hessian norm bounds (m = n = 40, r = 3).
Suite verify_bounds(std::uint64_t seed = 4);
/// LR and fixed-rank FD gradients, cross-geometry cost agreement.
Suite verify_baselines(std::uint64_t seed = 5);

/// Slope of log10(err) against log10(s) over the samples with err above
/// floor: least-squares fits over every run of consecutive samples covering
/// half of them, keeping the run with the smallest residual. Returns NaN with
/// fewer than three usable samples.
double loglog_slope(const std::vector<double>& s, const std::vector<double>& err,
                    double floor);

/// One line per check; returns true when every check passed.
bool print_suite(std::ostream& os, const std::string& title, const Suite& suite);

}  // namespace desing
