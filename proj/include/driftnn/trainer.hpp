#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <vector>

#include "driftnn/dataset.hpp"
#include "driftnn/metrics.hpp"
#include "driftnn/network.hpp"

namespace driftnn {

/// Per-epoch model selection criterion.
enum class TuningMetric {
  ValidationLoss,  ///< increment loss on the validation paths; needs no knowledge of f₀
  OracleRisk,      ///< empirical risk against a known f₀ on the validation paths
};

struct TrainConfig {
  Architecture arch;
  double s_ratio = 0.75;
  double learning_rate = 1e-3;
  std::size_t batch_size = 256;
  std::size_t max_epochs = 200;
  std::size_t patience = 20;
  double clamp = 10.0;
  std::uint64_t seed = 0;
  MaskMode mask_mode = MaskMode::ClassExact;
  TuningMetric metric = TuningMetric::ValidationLoss;
  bool zero_init = false;
  /// Count class-constraint violations after every optimizer step.
  bool check_invariants = false;
  /// When set, one JSON object per epoch is written here.
  std::ostream* progress = nullptr;

  /// Throws std::invalid_argument unless batch ≥ 1 and patience < max epochs.
  void validate() const;
};

struct TrainReport {
  std::size_t epochs_run = 0;
  std::size_t best_epoch = 0;  ///< 1-based
  double best_validation = 0.0;
  double final_train_loss = 0.0;
  std::vector<double> train_loss;  ///< sample-weighted mean minibatch loss per epoch
  std::vector<double> validation;  ///< selection metric per epoch
  /// final − minimum epoch training loss. A computable stand-in for the
  /// optimization gap, which itself needs the (unknown) class infimum.
  double optimization_gap_proxy = 0.0;
  std::size_t invariant_violations = 0;
  std::size_t budget = 0;

  bool operator==(const TrainReport&) const = default;
};

struct TrainResult {
  SparseNetwork net;
  TrainReport report;
};

class TrainingDiverged : public std::runtime_error {
 public:
  TrainingDiverged(std::size_t epoch, std::size_t batch);
  std::size_t epoch() const noexcept { return epoch_; }
  std::size_t batch() const noexcept { return batch_; }

 private:
  std::size_t epoch_;
  std::size_t batch_;
};

/// Called after every backward → Adam → projection → clipping cycle.
using StepObserver = std::function<void(const SparseNetwork& net, std::size_t epoch, std::size_t batch)>;

/// (1/|samples|)·Σ (y − f(x))² with f the clamped, masked network.
double empirical_loss(const SparseNetwork& net, const SampleSet& samples);
double empirical_loss(const ScalarField& f, const SampleSet& samples);

/// Minibatch Adam on the increment loss with top-s projection and clipping
/// after every step, per-epoch validation, early stopping and restoration of
/// the best-validation parameters. `oracle` is required for OracleRisk.
TrainResult train(const TrainConfig& config, const SampleSet& train_samples,
                  const SampleSet& valid_samples, const RiskEvaluator* oracle = nullptr,
                  const StepObserver& observer = {});

/// Builds the samples from `split` and trains. `target` (f₀) is required for OracleRisk.
TrainResult train(const TrainConfig& config, const DatasetSplit& split,
                  const ScalarField* target = nullptr, const StepObserver& observer = {});

}  // namespace driftnn
