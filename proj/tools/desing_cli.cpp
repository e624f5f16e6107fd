// desing: experiment driver for bounded-rank optimization through the
// desingularization, with the LR and fixed-rank baselines.
//
//   desing run --preset overestimate --out results/over
//   desing verify all
//   desing generate --preset expdecay-over --out problem.bin

#include <cstdio>
#include <iostream>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "desing/experiment.hpp"
#include "desing/verify.hpp"

namespace {

// Flags that map one-to-one onto experiment settings, in the order they are
// applied (after --preset and --config).
struct SettingFlag {
  const char* flag;
  const char* key;
  const char* help;
};

constexpr SettingFlag kSettingFlags[] = {
    {"--m", "m", "Rows"},
    {"--n", "n", "Columns"},
    {"--r", "r", "Optimization rank"},
    {"--r-star", "r_star", "Rank of the target"},
    {"--oversampling", "oversampling", "Observed entries per manifold dimension"},
    {"--sv", "sv", "Target singular values: uniform:lo,hi | expdecay:rho"},
    {"--seed", "seed", "Problem seed"},
    {"--alpha", "alpha", "Metric parameters, comma separated"},
    {"--geometry", "geometry", "desing, lr, fixed_rank or all (comma separated)"},
    {"--solver", "solver", "tr | gd"},
    {"--retraction", "retraction", "metric_projection | polar | qfactor"},
    {"--max-iters", "max_iters", "Maximum outer iterations"},
    {"--grad-tol", "grad_tol", "Gradient-norm tolerance"},
    {"--cost-tol", "cost_tol", "Relative progress tolerance"},
    {"--init-sigma-max", "init_sigma_max", "Initial singular values ~ U[0, this]"},
    {"--out", "out", "Output directory (run) or file (generate)"},
    {"--jobs", "jobs", "Parallel workers"},
};

struct SpecOptions {
  std::string preset;
  std::string config;
  std::vector<std::pair<const SettingFlag*, std::string>> values;
  std::vector<CLI::Option*> options;
};

void add_spec_options(CLI::App& app, SpecOptions& o) {
  app.add_option("--preset", o.preset, "overestimate | expdecay-exact | expdecay-over");
  app.add_option("--config", o.config, "Flat key = value file; flags override it")
      ->check(CLI::ExistingFile);
  o.values.reserve(std::size(kSettingFlags));
  for (const SettingFlag& f : kSettingFlags) {
    o.values.emplace_back(&f, std::string());
    o.options.push_back(app.add_option(f.flag, o.values.back().second, f.help));
  }
}

desing::ExperimentSpec build_spec(const SpecOptions& o) {
  desing::ExperimentSpec spec =
      o.preset.empty() ? desing::make_preset("overestimate") : desing::make_preset(o.preset);
  if (o.preset.empty()) {
    spec.preset = "custom";
  }
  if (!o.config.empty()) {
    desing::apply_config_file(spec, o.config);
  }
  for (std::size_t i = 0; i < o.values.size(); ++i) {
    if (o.options[i]->count() > 0) {
      desing::apply_setting(spec, o.values[i].first->key, o.values[i].second);
    }
  }
  return spec;
}

int run_command(const SpecOptions& o) {
  const desing::ExperimentSpec spec = build_spec(o);
  spec.validate();
  std::printf("problem %ldx%ld r*=%ld r=%ld sv=%s seed=%llu -> %s\n",
              static_cast<long>(spec.problem.m), static_cast<long>(spec.problem.n),
              static_cast<long>(spec.problem.r_star), static_cast<long>(spec.problem.r),
              spec.problem.sv.to_string().c_str(),
              static_cast<unsigned long long>(spec.problem.seed), spec.out_dir.c_str());
  const auto outcomes = desing::run_experiment(spec);
  std::printf("%-22s %6s %6s %12s %12s %9s  %s\n", "run", "outer", "acc", "cost", "grad_norm",
              "time_s", "stop");
  for (const auto& r : outcomes) {
    const auto& last = r.trace.records.back();
    std::printf("%-22s %6ld %6zu %12.4e %12.4e %9.3f  %s\n", r.label.c_str(),
                static_cast<long>(r.trace.outer_iterations), r.trace.records.size() - 1,
                last.cost, last.grad_norm, last.wall_time_s,
                desing::to_string(r.trace.stop).c_str());
  }
  return 0;
}

int verify_command(const std::string& which) {
  using SuiteFn = desing::Suite (*)();
  const std::pair<const char*, SuiteFn> suites[] = {
      {"geometry", [] { return desing::verify_geometry(); }},
      {"retractions", [] { return desing::verify_retractions(); }},
      {"calculus", [] { return desing::verify_calculus(); }},
      {"bounds", [] { return desing::verify_bounds(); }},
      {"baselines", [] { return desing::verify_baselines(); }},
  };
  bool ok = true;
  bool matched = false;
  for (const auto& [name, fn] : suites) {
    if (which == "all" || which == name) {
      matched = true;
      ok = desing::print_suite(std::cout, name, fn()) && ok;
    }
  }
  if (!matched) {
    std::cerr << "unknown suite '" << which << "'\n";
    return 2;
  }
  std::cout << (ok ? "all checks passed\n" : "some checks FAILED\n");
  return ok ? 0 : 1;
}

int generate_command(const SpecOptions& o) {
  desing::ExperimentSpec spec = build_spec(o);
  spec.validate();
  bool out_given = false;
  for (std::size_t i = 0; i < o.values.size(); ++i) {
    out_given = out_given || (std::string(o.values[i].first->key) == "out" && o.options[i]->count() > 0);
  }
  const std::filesystem::path path = out_given ? spec.out_dir : std::filesystem::path("problem.bin");
  const desing::CompletionProblem prob = desing::generate_problem(spec.problem);
  desing::save_problem(prob, path);
  std::printf("wrote %s (%ldx%ld, %ld observed entries)\n", path.c_str(),
              static_cast<long>(prob.mask.rows()), static_cast<long>(prob.mask.cols()),
              static_cast<long>(prob.mask.nnz()));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Bounded-rank optimization through the desingularization"};
  app.require_subcommand(1);

  SpecOptions run_opts;
  CLI::App* run = app.add_subcommand("run", "Run the solvers on a generated completion problem");
  add_spec_options(*run, run_opts);

  std::string suite = "all";
  CLI::App* verify = app.add_subcommand("verify", "Run the property suites");
  verify->add_option("suite", suite, "geometry | retractions | calculus | bounds | baselines | all");

  SpecOptions gen_opts;
  CLI::App* gen = app.add_subcommand("generate", "Write a completion problem file");
  add_spec_options(*gen, gen_opts);

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      return run_command(run_opts);
    }
    if (verify->parsed()) {
      return verify_command(suite);
    }
    return generate_command(gen_opts);
  } catch (const desing::InvalidArgument& e) {
    std::cerr << "invalid settings: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
