#pragma once

// Experiment driver: one generated completion problem, one shared initial
// point, and a solver run per (geometry, alpha). Each run writes a CSV trace
// and a JSON sidecar.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

#include "desing/completion.hpp"
#include "desing/solvers.hpp"

namespace desing {

enum class GeometryKind { Desing, LR, FixedRank };
enum class SolverKind { TrustRegion, GradientDescent };

std::string to_string(GeometryKind g);
GeometryKind parse_geometry(const std::string& name);
std::string to_string(SolverKind s);
SolverKind parse_solver(const std::string& name);

struct ExperimentSpec {
  std::string preset = "custom";
  GeneratorParams problem;
  std::vector<GeometryKind> geometries{GeometryKind::Desing, GeometryKind::LR,
                                       GeometryKind::FixedRank};
  std::vector<double> alphas{0.05, 0.5, 5.0};
  SolverKind solver = SolverKind::TrustRegion;
  SolverConfig solver_config;
  /// Upper end of the uniform distribution of the initial singular values.
  double init_sigma_max = 1e-3;
  std::filesystem::path out_dir = "results";
  /// Parallel workers; each runs single-threaded.
  int jobs = 1;

  /// Throws InvalidArgument on inconsistent fields.
  void validate() const;
};

/// "overestimate", "expdecay-exact" or "expdecay-over".
ExperimentSpec make_preset(const std::string& name);
std::vector<std::string> preset_names();

/// Applies one key = value setting. Keys match the long CLI flags with
/// dashes replaced by underscores (m, n, r, r_star, alpha, geometry, seed,
/// out, oversampling, sv, max_iters, grad_tol, ...). Lists are comma
/// separated.
void apply_setting(ExperimentSpec& spec, const std::string& key, const std::string& value);

/// Flat text file: one key = value per line, '#' starts a comment.
void apply_config_file(ExperimentSpec& spec, const std::filesystem::path& path);

struct RunOutcome {
  std::string label;
  GeometryKind geometry = GeometryKind::Desing;
  double alpha = 0.0;
  SolverTrace trace;
  std::filesystem::path csv_path;
  std::filesystem::path json_path;
};

/// Stable label: "desing_alpha0.5", "lr", "fixed_rank".
std::string run_label(GeometryKind g, double alpha);

/// Initial point shared by every geometry: U, V uniform on their Stiefel
/// manifolds, singular values uniform in [0, init_sigma_max].
ManifoldPoint initial_point(const ExperimentSpec& spec);

/// Runs every (geometry, alpha) pair on one problem; returns outcomes in a
/// fixed order regardless of scheduling.
std::vector<RunOutcome> run_experiment(const ExperimentSpec& spec);

/// iter,cost,grad_norm,time_s with lowercase scientific notation.
void write_trace_csv(std::ostream& os, const SolverTrace& trace);

/// Writes content to path through a temporary file in the same directory
/// followed by a rename.
void write_file_atomic(const std::filesystem::path& path, const std::string& content);

}  // namespace desing
