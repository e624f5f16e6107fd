// One PASS/FAIL line per acceptance criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "desing/calculus.hpp"
#include "desing/completion.hpp"
#include "desing/experiment.hpp"
#include "desing/geometries.hpp"
#include "desing/retraction.hpp"
#include "desing/solvers.hpp"
#include "desing/verify.hpp"

namespace {

using namespace desing;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

struct Verdict {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

// Every check in the suite whose name starts with one of the prefixes.
Verdict suite_verdict(const Suite& suite, const std::vector<std::string>& prefixes) {
  Verdict v{true, ""};
  int used = 0;
  for (const auto& c : suite) {
    const bool match = std::any_of(prefixes.begin(), prefixes.end(), [&](const std::string& p) {
      return c.name.rfind(p, 0) == 0;
    });
    if (!match) {
      continue;
    }
    ++used;
    v.passed = v.passed && c.passed;
    v.detail += (v.detail.empty() ? "" : " ") + c.name + "=" + fmt(c.measured);
  }
  if (used == 0) {
    return {false, "no checks matched"};
  }
  return v;
}

bool costs_non_increasing(const SolverTrace& t) {
  for (std::size_t i = 1; i < t.records.size(); ++i) {
    if (t.records[i].cost > t.records[i - 1].cost) {
      return false;
    }
  }
  return true;
}

Verdict criterion1() {
  const auto t0 = Clock::now();
  const Suite s = verify_calculus();
  const double elapsed = seconds_since(t0);
  Verdict v = suite_verdict(s, {"gradient_fd_"});
  v.passed = v.passed && elapsed < 10.0;
  v.detail += " suite_time_s=" + fmt(elapsed);
  return v;
}

Verdict criterion2() {
  return suite_verdict(verify_calculus(),
                       {"hessian_symmetry_", "hessian_quadratic_form_", "hessian_taylor_slope_"});
}

Verdict criterion3() {
  return suite_verdict(verify_retractions(), {"retraction_", "intrinsic_acceleration_",
                                              "metric_projection_is_nearest"});
}

Verdict criterion4() { return suite_verdict(verify_geometry(), {""}); }

Verdict criterion5() { return suite_verdict(verify_bounds(), {""}); }

Verdict criterion6() {
  const ExperimentSpec spec = make_preset("overestimate");
  const CompletionProblem prob = generate_problem(spec.problem);
  const CompletionCost f(prob);
  const DesingGeometry geom(f, MetricParam(0.5), spec.solver_config.retraction);
  const auto t0 = Clock::now();
  const auto res = trust_region(geom, initial_point(spec), spec.solver_config);
  const double elapsed = seconds_since(t0);
  const TraceRecord& last = res.trace.records.back();
  const bool descent = costs_non_increasing(res.trace);
  Verdict v;
  v.passed = last.cost <= 1e-8 && last.grad_norm <= 1e-6 && res.trace.outer_iterations <= 100 &&
             elapsed < 60.0 && descent;
  v.detail = "cost=" + fmt(last.cost) + " grad=" + fmt(last.grad_norm) +
             " outer=" + std::to_string(res.trace.outer_iterations) + " time_s=" + fmt(elapsed) +
             " descent=" + (descent ? "yes" : "no");
  return v;
}

// First outer iteration whose accepted iterate has cost <= tol.
Index iterations_to(const SolverTrace& t, double tol) {
  for (const auto& r : t.records) {
    if (r.cost <= tol) {
      return r.iter;
    }
  }
  return std::numeric_limits<Index>::max();
}

std::string iter_text(Index k) {
  return k == std::numeric_limits<Index>::max() ? "never" : std::to_string(k);
}

Verdict criterion7() {
  Verdict v{true, ""};
  for (std::uint64_t seed : {1, 2, 3}) {
    ExperimentSpec spec = make_preset("expdecay-over");
    spec.problem.seed = seed;
    const CompletionProblem prob = generate_problem(spec.problem);
    const CompletionCost f(prob);
    const ManifoldPoint x0 = initial_point(spec);
    const auto ds = trust_region(DesingGeometry(f, MetricParam(0.5), spec.solver_config.retraction),
                                 x0, spec.solver_config);
    const auto lr = trust_region(LRGeometry(f), lr_balanced(x0), spec.solver_config);
    const Index kd = iterations_to(ds.trace, 1e-6);
    const Index kl = iterations_to(lr.trace, 1e-6);
    const bool ok = kd != std::numeric_limits<Index>::max() && kd <= kl;
    v.passed = v.passed && ok;
    v.detail += (v.detail.empty() ? "" : " ") + std::string("seed") + std::to_string(seed) +
                ":desing=" + iter_text(kd) + ",lr=" + iter_text(kl);
  }
  return v;
}

template <class Fn>
double median_time(Fn&& fn, int reps) {
  std::vector<double> t;
  for (int i = 0; i < reps; ++i) {
    const auto t0 = Clock::now();
    fn();
    t.push_back(seconds_since(t0));
  }
  std::sort(t.begin(), t.end());
  return t[t.size() / 2];
}

struct ScaleTimes {
  double retraction = 0.0;
  double gradient = 0.0;
};

ScaleTimes time_at_scale(Index mn) {
  GeneratorParams p;
  p.m = mn;
  p.n = mn;
  p.r_star = 10;
  p.r = 10;
  p.oversampling = 5.0;
  p.sv = SvSpec::uniform(0.5, 1.0);
  p.seed = 8;
  const CompletionProblem prob = generate_problem(p);
  const CompletionCost f(prob);
  const MetricParam metric(0.5);
  const ManifoldPoint x = random_point(ManifoldDims(mn, mn, 10), 9, {0.1, 1.0});
  const TangentVector t = random_tangent(x, metric, 10);
  volatile double sink = 0.0;
  ScaleTimes out;
  out.retraction = median_time(
      [&] {
        const auto y = retract(x, t, metric, RetractionKind::MetricProjection, true);
        sink = sink + y.point.sigma()(0);
      },
      9);
  out.gradient = median_time(
      [&] {
        const auto model = f.at(factored(x));
        const TangentVector g = riemannian_gradient(x, *model, metric);
        sink = sink + g.K(0, 0);
      },
      9);
  return out;
}

Verdict criterion8() {
  const ScaleTimes a = time_at_scale(2000);
  const ScaleTimes b = time_at_scale(4000);
  const double rr = b.retraction / a.retraction;
  const double rg = b.gradient / a.gradient;
  return {rr < 3.0 && rg < 3.0,
          "retraction_ratio=" + fmt(rr) + " gradient_ratio=" + fmt(rg) + " (2000: " +
              fmt(a.retraction) + "s/" + fmt(a.gradient) + "s, 4000: " + fmt(b.retraction) +
              "s/" + fmt(b.gradient) + "s)"};
}

std::vector<std::string> csv_without_time(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) {
    out.push_back(line.substr(0, line.rfind(',')));
  }
  return out;
}

Verdict criterion9() {
  const fs::path base = fs::temp_directory_path() / "desing_acceptance_determinism";
  fs::remove_all(base);
  ExperimentSpec spec = make_preset("overestimate");
  spec.alphas = {0.5};
  spec.out_dir = base / "a";
  const auto first = run_experiment(spec);
  spec.out_dir = base / "b";
  const auto second = run_experiment(spec);
  Verdict v{first.size() == second.size() && !first.empty(), ""};
  for (std::size_t i = 0; v.passed && i < first.size(); ++i) {
    const auto a = csv_without_time(first[i].csv_path);
    const auto b = csv_without_time(second[i].csv_path);
    const bool same = a == b && a.size() == first[i].trace.records.size() + 1;
    v.passed = v.passed && same;
    v.detail += (v.detail.empty() ? "" : " ") + first[i].label + ":" +
                std::to_string(a.size() - 1) + "rows" + (same ? "" : "(differs)");
  }
  fs::remove_all(base);
  return v;
}

Verdict criterion10() { return suite_verdict(verify_baselines(), {""}); }

}  // namespace

int main() {
  const std::vector<std::pair<std::string, std::function<Verdict()>>> criteria{
      {"gradient correctness", criterion1},
      {"hessian correctness", criterion2},
      {"retraction order", criterion3},
      {"metric and projection algebra", criterion4},
      {"norm bounds", criterion5},
      {"desk-scale convergence", criterion6},
      {"rank-overestimation robustness", criterion7},
      {"complexity scaling", criterion8},
      {"determinism", criterion9},
      {"baseline sanity", criterion10},
  };
  bool all = true;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Verdict v;
    try {
      v = criteria[i].second();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    all = all && v.passed;
    std::cout << (v.passed ? "PASS" : "FAIL") << " criterion " << (i + 1) << " "
              << criteria[i].first << ": " << v.detail << std::endl;
  }
  return all ? 0 : 1;
}
