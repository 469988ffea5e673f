#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "driftnn/bspline.hpp"
#include "driftnn/config.hpp"
#include "driftnn/dataset.hpp"
#include "driftnn/metrics.hpp"
#include "driftnn/sde.hpp"
#include "driftnn/trainer.hpp"

namespace driftnn {

/// Everything a sweep needs. `desk()` is the default laptop profile and
/// `paper()` the full grid (J = 50, d up to 50).
struct ExperimentConfig {
  std::string profile = "desk";

  std::string drift_kind = "paper_example";  ///< paper_example | ou | zero
  double theta = 0.2;
  std::string diffusion_kind = "identity";   ///< identity | scaled
  double diffusion_scale = 1.0;
  std::string x0_kind = "normal";            ///< normal | constant
  double x0_value = 0.0;
  double horizon = 1.0;
  std::size_t steps = 100;
  std::size_t component = 1;

  std::vector<std::size_t> n_list;
  std::vector<std::size_t> d_list;
  std::vector<std::string> methods;
  std::size_t reps = 5;
  std::size_t test_paths = 1000;
  std::size_t valid_paths = 1000;
  std::uint64_t seed = 0;

  std::vector<std::vector<std::size_t>> hidden;  ///< hidden widths; (d, ..., 1) is implied
  std::vector<double> s_ratios;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double clamp = 10.0;
  std::size_t restarts = 1;  ///< initialisations per (arch, s_ratio) candidate
  bool strict_eq4 = false;   ///< drop the output-layer shift
  MaskMode mask_mode = MaskMode::ClassExact;
  TuningMetric tuning = TuningMetric::ValidationLoss;

  std::vector<std::size_t> knots;
  std::vector<double> ridges;
  double memory_cap_bytes = 2.0 * 1024 * 1024 * 1024;

  std::size_t workers = 1;
  std::string out_dir;
  bool svg = false;
  bool save_models = false;

  static ExperimentConfig desk();
  static ExperimentConfig paper();
  /// Starts from the profile named by `profile` (default desk) and applies
  /// every key present. Throws ConfigError on unknown keys or bad values.
  static ExperimentConfig from(const KeyValueConfig& kv);
  static ExperimentConfig load(const std::string& path);

  /// Throws ConfigError when a list is empty or a value is out of range.
  void validate() const;

  DriftSpec drift(std::size_t d) const;
  DiffusionSpec diffusion(std::size_t d) const;
  InitialLaw initial_law(std::size_t d) const;
  GridSpec grid() const { return GridSpec(horizon, steps); }
};

/// Keys accepted by ExperimentConfig::from.
const std::vector<std::string>& experiment_config_keys();

struct Cell {
  std::string method;  ///< "nn" or "bspline"
  std::size_t n = 0;
  std::size_t d = 0;
  std::size_t rep = 0;
};

/// One results-CSV row.
struct ExperimentRecord {
  std::string method;
  std::size_t n = 0;
  std::size_t d = 0;
  std::string arch;
  std::string param;  ///< s_ratio for nn, K_N for bspline
  std::uint64_t seed = 0;
  std::size_t epochs = 0;
  double test_error = 0.0;
  double wall_ms = 0.0;
  std::string status = "ok";

  bool ok() const noexcept { return status == "ok"; }
};

/// Seed of the data (train/valid/test) of repetition `rep` at (N, d). Shared
/// by every method so they see the same paths.
std::uint64_t data_seed(std::uint64_t master, std::size_t n, std::size_t d, std::size_t rep);
/// Seed of a method's own randomness (initialisation, shuffling).
std::uint64_t method_seed(std::uint64_t master, std::size_t n, std::size_t d, const std::string& method,
                          std::size_t rep);

/// Generates the data of the cell, tunes on the validation paths, evaluates
/// the empirical risk on the test paths. Failures become records whose
/// status starts with "failed:"; nothing is thrown for per-cell errors.
ExperimentRecord run_single(const ExperimentConfig& config, const Cell& cell);

struct RateRow {
  std::string method;
  std::size_t d = 0;
  RateFit fit;
};

struct SweepResult {
  std::vector<ExperimentRecord> records;
  std::vector<AggregateRow> aggregates;
  std::vector<RateRow> rates;

  bool all_failed() const;
};

/// Cells in output order: method, d, N, repetition.
std::vector<Cell> sweep_cells(const ExperimentConfig& config);

/// Runs every cell on a pool of `config.workers` threads, aggregates per
/// (method, N, d) and fits log–log rates per (method, d). Writes the CSVs
/// (and SVGs when enabled) into `config.out_dir` when it is set.
SweepResult run_sweep(const ExperimentConfig& config);

void write_results_csv(std::ostream& out, const std::vector<ExperimentRecord>& records);
std::string format_record(const ExperimentRecord& record);
void write_rates_csv(std::ostream& out, const std::vector<RateRow>& rates);

}  // namespace driftnn
