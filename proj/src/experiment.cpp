#include "desing/experiment.hpp"

#include <omp.h>

#include <Eigen/Core>
#include <algorithm>
#include <atomic>
#include <cstdio>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include "json.hpp"

#ifndef DESING_BUILD_TYPE
#define DESING_BUILD_TYPE "unknown"
#endif

namespace desing {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) {
    return "";
  }
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) {
      out.push_back(item);
    }
  }
  return out;
}

double to_double(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  double x = 0.0;
  try {
    x = std::stod(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw InvalidArgument(key + ": expected a number, got '" + v + "'");
  }
  return x;
}

long long to_int(const std::string& key, const std::string& v) {
  std::size_t pos = 0;
  long long x = 0;
  try {
    x = std::stoll(v, &pos);
  } catch (const std::exception&) {
    pos = 0;
  }
  if (pos == 0 || pos != v.size()) {
    throw InvalidArgument(key + ": expected an integer, got '" + v + "'");
  }
  return x;
}

Index to_index(const std::string& key, const std::string& v) {
  const long long x = to_int(key, v);
  if (x < 0) {
    throw InvalidArgument(key + " must be non-negative");
  }
  return static_cast<Index>(x);
}

std::uint64_t splitmix(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::string format_sci(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", x);
  return buf;
}

template <class G>
SolverResult<typename G::Point> solve(const G& geom, typename G::Point start,
                                      const ExperimentSpec& spec) {
  if (spec.solver == SolverKind::TrustRegion) {
    return trust_region(geom, std::move(start), spec.solver_config);
  }
  return gradient_descent(geom, std::move(start), spec.solver_config);
}

nlohmann::json spec_json(const ExperimentSpec& spec, Index nnz) {
  const GeneratorParams& p = spec.problem;
  const SolverConfig& c = spec.solver_config;
  nlohmann::json j;
  j["preset"] = spec.preset;
  j["problem"] = {{"m", p.m},
                  {"n", p.n},
                  {"r_star", p.r_star},
                  {"r", p.r},
                  {"oversampling", p.oversampling},
                  {"sv", p.sv.to_string()},
                  {"seed", p.seed},
                  {"nnz", nnz}};
  j["init"] = {{"sigma_min", 0.0}, {"sigma_max", spec.init_sigma_max}};
  j["solver"] = to_string(spec.solver);
  j["solver_config"] = {{"max_outer_iters", c.max_outer_iters},
                        {"grad_tol", c.grad_tol},
                        {"cost_tol", c.cost_tol},
                        {"tr_initial_radius", c.tr_initial_radius},
                        {"tr_max_radius", c.tr_max_radius},
                        {"tcg_theta", c.tcg_theta},
                        {"tcg_kappa", c.tcg_kappa},
                        {"tcg_max_inner", c.tcg_max_inner},
                        {"ls_armijo_c", c.ls_armijo_c},
                        {"ls_backtrack", c.ls_backtrack},
                        {"ls_initial_step", c.ls_initial_step},
                        {"ls_max_backtracks", c.ls_max_backtracks},
                        {"retraction", std::string(to_string(c.retraction))}};
  return j;
}

nlohmann::json environment_json(const ExperimentSpec& spec) {
  nlohmann::json j;
#if defined(__clang__)
  j["compiler"] = std::string("clang ") + __clang_version__;
#elif defined(__GNUC__)
  j["compiler"] = std::string("gcc ") + __VERSION__;
#else
  j["compiler"] = "unknown";
#endif
  j["build_type"] = DESING_BUILD_TYPE;
  j["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) +
               "." + std::to_string(EIGEN_MINOR_VERSION);
  j["openmp"] = _OPENMP;
  j["omp_max_threads"] = omp_get_max_threads();
  j["hardware_threads"] = std::thread::hardware_concurrency();
  j["jobs"] = spec.jobs;
  return j;
}

struct Job {
  GeometryKind geometry;
  double alpha;
};

}  // namespace

std::string to_string(GeometryKind g) {
  switch (g) {
    case GeometryKind::Desing:
      return "desing";
    case GeometryKind::LR:
      return "lr";
    case GeometryKind::FixedRank:
      return "fixed_rank";
  }
  return "unknown";
}

GeometryKind parse_geometry(const std::string& name) {
  if (name == "desing") return GeometryKind::Desing;
  if (name == "lr") return GeometryKind::LR;
  if (name == "fixed_rank" || name == "fixedrank") return GeometryKind::FixedRank;
  throw InvalidArgument("unknown geometry '" + name + "' (desing, lr, fixed_rank, all)");
}

std::string to_string(SolverKind s) {
  return s == SolverKind::TrustRegion ? "tr" : "gd";
}

SolverKind parse_solver(const std::string& name) {
  if (name == "tr" || name == "trust_region") return SolverKind::TrustRegion;
  if (name == "gd" || name == "gradient_descent") return SolverKind::GradientDescent;
  throw InvalidArgument("unknown solver '" + name + "' (tr, gd)");
}

void ExperimentSpec::validate() const {
  const GeneratorParams& p = problem;
  if (p.m < 2 || p.n < 2) {
    throw InvalidArgument("m and n must be at least 2");
  }
  if (p.r < 1 || p.r >= std::min(p.m, p.n)) {
    throw InvalidArgument("r must satisfy 1 <= r < min(m, n)");
  }
  if (p.r_star < 1 || p.r_star > std::min(p.m, p.n)) {
    throw InvalidArgument("r_star must satisfy 1 <= r_star <= min(m, n)");
  }
  if (!(p.oversampling > 0.0)) {
    throw InvalidArgument("oversampling must be positive");
  }
  if (target_nnz(p.m, p.n, p.r, p.oversampling) > p.m * p.n) {
    throw OversampleTooLarge("oversampling " + std::to_string(p.oversampling) +
                             " asks for more entries than the matrix has");
  }
  if (geometries.empty()) {
    throw InvalidArgument("no geometry selected");
  }
  const bool desing =
      std::find(geometries.begin(), geometries.end(), GeometryKind::Desing) != geometries.end();
  if (desing && alphas.empty()) {
    throw InvalidArgument("desing geometry needs at least one alpha");
  }
  for (double a : alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw InvalidArgument("alpha must be positive and finite");
    }
  }
  if (!(init_sigma_max > 0.0)) {
    throw InvalidArgument("init_sigma_max must be positive");
  }
  if (jobs < 1) {
    throw InvalidArgument("jobs must be at least 1");
  }
  if (out_dir.empty()) {
    throw InvalidArgument("output directory is empty");
  }
  solver_config.validate();
}

std::vector<std::string> preset_names() {
  return {"overestimate", "expdecay-exact", "expdecay-over"};
}

ExperimentSpec make_preset(const std::string& name) {
  ExperimentSpec spec;
  spec.preset = name;
  spec.problem.m = 300;
  spec.problem.n = 300;
  spec.problem.oversampling = 5.0;
  spec.problem.seed = 1;
  spec.solver_config.max_outer_iters = 500;
  if (name == "overestimate") {
    spec.problem.r_star = 5;
    spec.problem.r = 10;
    spec.problem.sv = SvSpec::uniform(0.5, 1.0);
  } else if (name == "expdecay-exact") {
    spec.problem.r_star = 10;
    spec.problem.r = 10;
    spec.problem.sv = SvSpec::exp_decay(0.9);
  } else if (name == "expdecay-over") {
    spec.problem.r_star = 10;
    spec.problem.r = 20;
    spec.problem.sv = SvSpec::exp_decay(0.9);
  } else {
    throw InvalidArgument("unknown preset '" + name + "'");
  }
  return spec;
}

void apply_setting(ExperimentSpec& spec, const std::string& raw_key, const std::string& raw_value) {
  std::string key = trim(raw_key);
  std::replace(key.begin(), key.end(), '-', '_');
  const std::string v = trim(raw_value);
  GeneratorParams& p = spec.problem;
  SolverConfig& c = spec.solver_config;

  if (key == "preset") {
    spec = make_preset(v);
  } else if (key == "m") {
    p.m = to_index(key, v);
  } else if (key == "n") {
    p.n = to_index(key, v);
  } else if (key == "r") {
    p.r = to_index(key, v);
  } else if (key == "r_star") {
    p.r_star = to_index(key, v);
  } else if (key == "oversampling") {
    p.oversampling = to_double(key, v);
  } else if (key == "sv") {
    p.sv = SvSpec::parse(v);
  } else if (key == "seed") {
    p.seed = static_cast<std::uint64_t>(to_index(key, v));
  } else if (key == "alpha" || key == "alphas") {
    spec.alphas.clear();
    for (const std::string& a : split_list(v)) {
      spec.alphas.push_back(to_double(key, a));
    }
  } else if (key == "geometry" || key == "geometries") {
    spec.geometries.clear();
    for (const std::string& g : split_list(v)) {
      if (g == "all") {
        spec.geometries = {GeometryKind::Desing, GeometryKind::LR, GeometryKind::FixedRank};
      } else {
        spec.geometries.push_back(parse_geometry(g));
      }
    }
  } else if (key == "solver") {
    spec.solver = parse_solver(v);
  } else if (key == "retraction") {
    c.retraction = parse_retraction_kind(v);
  } else if (key == "max_iters" || key == "max_outer_iters") {
    c.max_outer_iters = to_index(key, v);
  } else if (key == "grad_tol") {
    c.grad_tol = to_double(key, v);
  } else if (key == "cost_tol") {
    c.cost_tol = to_double(key, v);
  } else if (key == "tr_initial_radius") {
    c.tr_initial_radius = to_double(key, v);
  } else if (key == "tr_max_radius") {
    c.tr_max_radius = to_double(key, v);
  } else if (key == "tcg_theta") {
    c.tcg_theta = to_double(key, v);
  } else if (key == "tcg_kappa") {
    c.tcg_kappa = to_double(key, v);
  } else if (key == "tcg_max_inner") {
    c.tcg_max_inner = to_index(key, v);
  } else if (key == "ls_armijo_c") {
    c.ls_armijo_c = to_double(key, v);
  } else if (key == "ls_backtrack") {
    c.ls_backtrack = to_double(key, v);
  } else if (key == "ls_initial_step") {
    c.ls_initial_step = to_double(key, v);
  } else if (key == "ls_max_backtracks") {
    c.ls_max_backtracks = to_index(key, v);
  } else if (key == "init_sigma_max") {
    spec.init_sigma_max = to_double(key, v);
  } else if (key == "out") {
    spec.out_dir = v;
  } else if (key == "jobs") {
    spec.jobs = static_cast<int>(to_int(key, v));
  } else {
    throw InvalidArgument("unknown setting '" + key + "'");
  }
}

void apply_config_file(ExperimentSpec& spec, const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw Error("cannot open config file " + path.string());
  }
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) {
      line.erase(hash);
    }
    if (trim(line).empty()) {
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    }
    try {
      apply_setting(spec, line.substr(0, eq), line.substr(eq + 1));
    } catch (const Error& e) {
      throw InvalidArgument(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

std::string run_label(GeometryKind g, double alpha) {
  if (g != GeometryKind::Desing) {
    return to_string(g);
  }
  char buf[48];
  std::snprintf(buf, sizeof buf, "desing_alpha%g", alpha);
  return buf;
}

ManifoldPoint initial_point(const ExperimentSpec& spec) {
  const GeneratorParams& p = spec.problem;
  return random_point(ManifoldDims(p.m, p.n, p.r), splitmix(p.seed ^ 0x696e6974ULL),
                      {0.0, spec.init_sigma_max});
}

void write_trace_csv(std::ostream& os, const SolverTrace& trace) {
  os << "iter,cost,grad_norm,time_s\n";
  for (const TraceRecord& r : trace.records) {
    os << r.iter << ',' << format_sci(r.cost) << ',' << format_sci(r.grad_norm) << ','
       << format_sci(r.wall_time_s) << '\n';
  }
}

void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw Error("cannot open " + tmp.string() + " for writing");
    }
    out << content;
    out.flush();
    if (!out) {
      throw Error("write failed for " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw Error("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec) {
  spec.validate();
  const CompletionProblem problem = generate_problem(spec.problem);
  const CompletionCost cost(problem);
  const ManifoldPoint x0 = initial_point(spec);

  std::vector<Job> jobs;
  for (GeometryKind g : spec.geometries) {
    if (g == GeometryKind::Desing) {
      for (double a : spec.alphas) {
        jobs.push_back({g, a});
      }
    } else {
      jobs.push_back({g, 0.0});
    }
  }

  std::error_code ec;
  std::filesystem::create_directories(spec.out_dir, ec);
  if (ec) {
    throw Error("cannot create " + spec.out_dir.string() + ": " + ec.message());
  }

  std::vector<RunOutcome> outcomes(jobs.size());
  auto run_one = [&](std::size_t i) {
    const Job& job = jobs[i];
    RunOutcome& out = outcomes[i];
    out.geometry = job.geometry;
    out.alpha = job.alpha;
    out.label = run_label(job.geometry, job.alpha);
    switch (job.geometry) {
      case GeometryKind::Desing:
        out.trace = solve(DesingGeometry(cost, MetricParam(job.alpha), spec.solver_config.retraction),
                          x0, spec)
                        .trace;
        break;
      case GeometryKind::LR:
        out.trace = solve(LRGeometry(cost), lr_balanced(x0), spec).trace;
        break;
      case GeometryKind::FixedRank:
        out.trace = solve(FixedRankGeometry(cost), FixedRankPoint(x0), spec).trace;
        break;
    }

    out.csv_path = spec.out_dir / (out.label + ".csv");
    out.json_path = spec.out_dir / (out.label + ".json");
    std::ostringstream csv;
    write_trace_csv(csv, out.trace);
    write_file_atomic(out.csv_path, csv.str());

    const SolverTrace& t = out.trace;
    const TraceRecord& last = t.records.back();
    nlohmann::json j = spec_json(spec, problem.mask.nnz());
    j["schema"] = "desing-trace-sidecar";
    j["schema_version"] = 1;
    j["label"] = out.label;
    j["geometry"] = to_string(job.geometry);
    j["alpha"] = job.geometry == GeometryKind::Desing ? nlohmann::json(job.alpha) : nlohmann::json();
    j["csv"] = out.csv_path.filename().string();
    j["result"] = {{"outer_iterations", t.outer_iterations},
                   {"accepted_iterations", static_cast<Index>(t.records.size()) - 1},
                   {"stop_reason", to_string(t.stop)},
                   {"final_cost", last.cost},
                   {"final_grad_norm", last.grad_norm},
                   {"wall_time_s", last.wall_time_s},
                   {"retraction_fallbacks", last.retraction_fallbacks},
                   {"retraction_failures", t.retraction_failures},
                   {"model_non_descent", t.model_non_descent},
                   {"line_search_stalled", t.line_search_stalled}};
    j["environment"] = environment_json(spec);
    write_file_atomic(out.json_path, j.dump(2) + "\n");
  };

  const std::size_t workers = std::min<std::size_t>(static_cast<std::size_t>(spec.jobs), jobs.size());
  if (workers <= 1) {
    for (std::size_t i = 0; i < jobs.size(); ++i) {
      run_one(i);
    }
    return outcomes;
  }

  std::atomic<std::size_t> next{0};
  std::mutex err_mu;
  std::exception_ptr first_error;
  std::vector<std::thread> pool;
  for (std::size_t w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      omp_set_num_threads(1);
      for (std::size_t i = next++; i < jobs.size(); i = next++) {
        try {
          run_one(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(err_mu);
          if (!first_error) {
            first_error = std::current_exception();
          }
        }
      }
    });
  }
  for (std::thread& t : pool) {
    t.join();
  }
  if (first_error) {
    std::rethrow_exception(first_error);
  }
  return outcomes;
}

}  // namespace desing
