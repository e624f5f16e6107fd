#include <gtest/gtest.h>

#include <fstream>
#include <sstream>

#include "desing/experiment.hpp"
#include "json.hpp"

namespace desing {
namespace {

namespace fs = std::filesystem;

fs::path scratch_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("desing_test_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::string> lines_without_time(const fs::path& p) {
  std::vector<std::string> out;
  std::istringstream in(slurp(p));
  for (std::string line; std::getline(in, line);) {
    out.push_back(line.substr(0, line.rfind(',')));
  }
  return out;
}

ExperimentSpec small_spec(const fs::path& out) {
  ExperimentSpec spec = make_preset("overestimate");
  spec.problem.m = 60;
  spec.problem.n = 50;
  spec.problem.r_star = 2;
  spec.problem.r = 4;
  spec.problem.oversampling = 3.0;
  spec.solver_config.max_outer_iters = 60;
  spec.out_dir = out;
  return spec;
}

TEST(Experiment, Presets) {
  const ExperimentSpec over = make_preset("overestimate");
  EXPECT_EQ(over.problem.m, 300);
  EXPECT_EQ(over.problem.n, 300);
  EXPECT_EQ(over.problem.r_star, 5);
  EXPECT_EQ(over.problem.r, 10);
  EXPECT_EQ(over.problem.sv, SvSpec::uniform(0.5, 1.0));
  const ExperimentSpec exact = make_preset("expdecay-exact");
  EXPECT_EQ(exact.problem.r_star, exact.problem.r);
  const ExperimentSpec eo = make_preset("expdecay-over");
  EXPECT_GT(eo.problem.r, eo.problem.r_star);
  EXPECT_EQ(eo.problem.sv.kind, SvSpec::Kind::ExpDecay);
  for (const auto& name : preset_names()) {
    EXPECT_NO_THROW(make_preset(name).validate());
  }
  EXPECT_THROW(make_preset("nope"), InvalidArgument);
}

TEST(Experiment, Settings) {
  ExperimentSpec spec = make_preset("overestimate");
  apply_setting(spec, "m", "40");
  apply_setting(spec, "r-star", "3");
  apply_setting(spec, "alpha", "0.1,2");
  apply_setting(spec, "geometry", "lr,fixed_rank");
  apply_setting(spec, "solver", "gd");
  apply_setting(spec, "sv", "expdecay:0.8");
  apply_setting(spec, "retraction", "polar");
  apply_setting(spec, "tcg_kappa", "0.05");
  apply_setting(spec, "ls-max-backtracks", "12");
  apply_setting(spec, "ls_initial_step", "0.5");
  EXPECT_EQ(spec.problem.m, 40);
  EXPECT_EQ(spec.problem.r_star, 3);
  EXPECT_EQ(spec.alphas, (std::vector<double>{0.1, 2.0}));
  EXPECT_EQ(spec.geometries, (std::vector<GeometryKind>{GeometryKind::LR, GeometryKind::FixedRank}));
  EXPECT_EQ(spec.solver, SolverKind::GradientDescent);
  EXPECT_EQ(spec.problem.sv, SvSpec::exp_decay(0.8));
  EXPECT_EQ(spec.solver_config.retraction, RetractionKind::Polar);
  EXPECT_EQ(spec.solver_config.tcg_kappa, 0.05);
  EXPECT_EQ(spec.solver_config.ls_max_backtracks, 12);
  EXPECT_EQ(spec.solver_config.ls_initial_step, 0.5);
  apply_setting(spec, "geometry", "all");
  EXPECT_EQ(spec.geometries.size(), 3u);

  EXPECT_THROW(apply_setting(spec, "bogus", "1"), InvalidArgument);
  EXPECT_THROW(apply_setting(spec, "m", "4x"), InvalidArgument);
  EXPECT_THROW(apply_setting(spec, "seed", "-1"), InvalidArgument);
  EXPECT_THROW(apply_setting(spec, "geometry", "euclid"), InvalidArgument);
}

TEST(Experiment, ValidationErrors) {
  auto bad = [](auto mutate, bool oversample = false) {
    ExperimentSpec s = make_preset("overestimate");
    mutate(s);
    if (oversample) {
      EXPECT_THROW(s.validate(), OversampleTooLarge);
    } else {
      EXPECT_THROW(s.validate(), InvalidArgument);
    }
  };
  bad([](ExperimentSpec& s) { s.problem.r = 300; });
  bad([](ExperimentSpec& s) { s.problem.r_star = 0; });
  bad([](ExperimentSpec& s) { s.alphas = {-1.0}; });
  bad([](ExperimentSpec& s) { s.alphas.clear(); });
  bad([](ExperimentSpec& s) { s.geometries.clear(); });
  bad([](ExperimentSpec& s) { s.jobs = 0; });
  bad([](ExperimentSpec& s) { s.problem.oversampling = 100.0; }, true);
}

TEST(Experiment, ConfigFile) {
  const fs::path dir = scratch_dir("config");
  fs::create_directories(dir);
  {
    std::ofstream out(dir / "run.cfg");
    out << "# comment\n\nm = 80\n  n=70  # trailing\nalpha = 1\n";
  }
  ExperimentSpec spec = make_preset("overestimate");
  apply_config_file(spec, dir / "run.cfg");
  EXPECT_EQ(spec.problem.m, 80);
  EXPECT_EQ(spec.problem.n, 70);
  EXPECT_EQ(spec.alphas, std::vector<double>{1.0});
  {
    std::ofstream out(dir / "bad.cfg");
    out << "m 80\n";
  }
  EXPECT_THROW(apply_config_file(spec, dir / "bad.cfg"), InvalidArgument);
  EXPECT_THROW(apply_config_file(spec, dir / "missing.cfg"), Error);
  fs::remove_all(dir);
}

TEST(Experiment, Labels) {
  EXPECT_EQ(run_label(GeometryKind::Desing, 0.5), "desing_alpha0.5");
  EXPECT_EQ(run_label(GeometryKind::Desing, 5.0), "desing_alpha5");
  EXPECT_EQ(run_label(GeometryKind::LR, 0.5), "lr");
  EXPECT_EQ(run_label(GeometryKind::FixedRank, 0.5), "fixed_rank");
  for (GeometryKind g : {GeometryKind::Desing, GeometryKind::LR, GeometryKind::FixedRank}) {
    EXPECT_EQ(parse_geometry(to_string(g)), g);
  }
  for (SolverKind s : {SolverKind::TrustRegion, SolverKind::GradientDescent}) {
    EXPECT_EQ(parse_solver(to_string(s)), s);
  }
}

TEST(Experiment, InitialPointRange) {
  const ExperimentSpec spec = make_preset("overestimate");
  const ManifoldPoint a = initial_point(spec);
  const ManifoldPoint b = initial_point(spec);
  EXPECT_EQ(a.U(), b.U());
  EXPECT_EQ(a.sigma(), b.sigma());
  EXPECT_GE(a.sigma().minCoeff(), 0.0);
  EXPECT_LE(a.sigma().maxCoeff(), spec.init_sigma_max);
  EXPECT_EQ(a.dims().r, spec.problem.r);
}

TEST(Experiment, CsvFormat) {
  SolverTrace t;
  t.records.push_back({0, 1.5, 0.25, 0.0, 0.0, 0, 0.001, 0});
  t.records.push_back({3, 1e-20, 2.0, 0.0, 0.0, 0, 0.5, 0});
  std::ostringstream os;
  write_trace_csv(os, t);
  EXPECT_EQ(os.str(),
            "iter,cost,grad_norm,time_s\n"
            "0,1.5000000000000000e+00,2.5000000000000000e-01,1.0000000000000000e-03\n"
            "3,9.9999999999999995e-21,2.0000000000000000e+00,5.0000000000000000e-01\n");
}

TEST(Experiment, AtomicWriteLeavesNoTemporary) {
  const fs::path dir = scratch_dir("atomic");
  fs::create_directories(dir);
  write_file_atomic(dir / "a.txt", "first");
  write_file_atomic(dir / "a.txt", "second");
  EXPECT_EQ(slurp(dir / "a.txt"), "second");
  EXPECT_FALSE(fs::exists(dir / "a.txt.tmp"));
  EXPECT_THROW(write_file_atomic(dir / "missing" / "a.txt", "x"), Error);
  fs::remove_all(dir);
}

TEST(Experiment, RunWritesTracesAndSidecars) {
  const fs::path dir = scratch_dir("run");
  ExperimentSpec spec = small_spec(dir);
  spec.alphas = {0.5};
  const auto outcomes = run_experiment(spec);
  ASSERT_EQ(outcomes.size(), 3u);
  EXPECT_EQ(outcomes[0].label, "desing_alpha0.5");
  EXPECT_EQ(outcomes[1].label, "lr");
  EXPECT_EQ(outcomes[2].label, "fixed_rank");
  for (const auto& o : outcomes) {
    const auto lines = lines_without_time(o.csv_path);
    EXPECT_EQ(lines.front(), "iter,cost,grad_norm");
    EXPECT_EQ(lines.size(), o.trace.records.size() + 1);
    const auto j = nlohmann::json::parse(slurp(o.json_path));
    EXPECT_EQ(j["schema"], "desing-trace-sidecar");
    EXPECT_EQ(j["schema_version"], 1);
    EXPECT_EQ(j["label"], o.label);
    EXPECT_EQ(j["csv"], o.csv_path.filename().string());
    EXPECT_EQ(j["problem"]["m"], 60);
    EXPECT_EQ(j["problem"]["sv"], "uniform:0.5,1");
    EXPECT_EQ(j["result"]["accepted_iterations"],
              static_cast<Index>(o.trace.records.size()) - 1);
    EXPECT_EQ(j["result"]["stop_reason"], to_string(o.trace.stop));
    EXPECT_EQ(j["result"]["final_cost"].get<double>(), o.trace.records.back().cost);
    EXPECT_TRUE(j["environment"].contains("compiler"));
    if (o.geometry == GeometryKind::Desing) {
      EXPECT_EQ(j["alpha"], 0.5);
    } else {
      EXPECT_TRUE(j["alpha"].is_null());
    }
    EXPECT_LT(o.trace.records.back().cost, o.trace.records.front().cost);
  }
  fs::remove_all(dir);
}

TEST(Experiment, DeterministicAcrossRunsAndJobs) {
  const fs::path d1 = scratch_dir("det1");
  const fs::path d2 = scratch_dir("det2");
  ExperimentSpec s1 = small_spec(d1);
  ExperimentSpec s2 = small_spec(d2);
  s2.jobs = 3;
  const auto a = run_experiment(s1);
  const auto b = run_experiment(s2);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].label, b[i].label);
    EXPECT_EQ(lines_without_time(a[i].csv_path), lines_without_time(b[i].csv_path)) << a[i].label;
  }
  fs::remove_all(d1);
  fs::remove_all(d2);
}

}  // namespace
}  // namespace desing
