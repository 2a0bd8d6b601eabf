#pragma once

#include "wmsindy/common.hpp"
#include "wmsindy/dynamics.hpp"
#include "wmsindy/joint.hpp"
#include "wmsindy/metrics.hpp"
#include "wmsindy/noise.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace wmsindy {

enum class SweepAxis { none, noise_level, data_length, lambda, q, n_loop };

std::string to_string(SweepAxis axis);
SweepAxis parse_sweep_axis(std::string_view name);

struct ExperimentConfig {
  std::string preset;
  std::string system;  // ground-truth system
  std::string method;  // wsindy, msindy or wmsindy
  bool nonzero_mean = false;
  int nonzero_mean_iterations = 3;

  std::vector<double> x0;
  double t_total = 25.0;
  double dt = 0.01;

  int library_degree = 2;
  bool library_constant = false;
  std::optional<std::string> known_model;

  NoiseSpec noise;
  JointConfig joint;

  SweepAxis axis = SweepAxis::none;
  std::vector<double> grid;
  int runs_per_point = 10;
  std::vector<std::uint64_t> seeds;

  /// Forward-prediction horizon in seconds; a fraction of the record wins when set.
  double horizon_seconds = 6.0;
  std::optional<double> horizon_fraction;

  std::filesystem::path output_dir;

  /// Label used in file names and tables, e.g. "wmsindy" or "msindy_no_ed".
  std::string label() const;
  LibrarySpec library() const;
};

/// Throws ContractViolation naming the first problem.
void validate(const ExperimentConfig& cfg);

/// Per-run seeds derived from a master seed; identical for every method.
std::vector<std::uint64_t> derive_seeds(std::uint64_t master, int count);

/// Master seed from WMSINDY_SEED, or `fallback` when unset.
std::uint64_t master_seed_from_env(std::uint64_t fallback = 0);

struct BenchOptions {
  std::optional<int> runs;
  std::optional<double> grid_step;
  std::optional<int> iters_per_loop;
  std::uint64_t master_seed = 0;
};

/// Named presets: fig2..fig6, table2:<system>, fig13, fig13b, fig14, fig15, fig16..fig19.
std::vector<ExperimentConfig> make_preset(std::string_view name, const BenchOptions& options);
std::vector<std::string> preset_names();

struct IdentifyRequest {
  std::string system = "unknown";  // recorded in the result document only
  std::string method = "wmsindy";
  Trajectory data;
  JointConfig joint;
  std::optional<double> wsindy_lambda;  // grid search when absent
  int library_degree = 2;
  bool library_constant = false;
  std::optional<std::string> known_model;
  bool nonzero_mean = false;
  int nonzero_mean_iterations = 3;
  std::uint64_t seed = 0;
};

struct IdentifyOutput {
  LibrarySpec spec;
  ModelEstimate estimate;
  std::optional<IdentificationResult> result;  // joint methods only
  double wall_time = 0.0;
  std::string document;  // result JSON without metrics
};

/// Runs one identification method on a trajectory.
IdentifyOutput identify(const IdentifyRequest& request);

/// One (sweep value, seed) evaluation.
struct CellResult {
  std::string label;
  double sweep_value = 0.0;
  int sweep_index = 0;
  int seed_index = 0;
  std::uint64_t seed = 0;
  RunMetrics metrics;
  double wall_time = 0.0;
  std::string json;  // per-run document
};

struct CellFailure {
  std::string label;
  double sweep_value = 0.0;
  std::uint64_t seed = 0;
  std::string error;
};

/// Runs one cell; throws on failure.
CellResult run_cell(const ExperimentConfig& cfg, int sweep_index, int seed_index);

struct SweepOutcome {
  std::vector<CellResult> results;  // sorted by (label, sweep index, seed index)
  std::vector<CellFailure> failures;
};

/// Executes every cell of every config on a bounded worker pool and writes
/// the per-run JSON, aggregate and timing CSVs, failures.csv and manifest.json
/// into `output_dir`.
SweepOutcome sweep(const std::vector<ExperimentConfig>& configs, const std::filesystem::path& output_dir,
                   int parallelism);

/// Single-config convenience wrapper around sweep.
SweepOutcome run_experiment(const ExperimentConfig& cfg, int parallelism = 1);

/// Reads the aggregate CSVs in `dir` and writes one CSV per panel.
/// Returns the written paths.
std::vector<std::filesystem::path> emit_figure_data(const std::filesystem::path& dir, std::string_view figure);

}  // namespace wmsindy
