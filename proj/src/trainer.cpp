#include "driftnn/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "driftnn/rng.hpp"

namespace driftnn {

void TrainConfig::validate() const {
  if (batch_size == 0) throw std::invalid_argument("batch size must be at least 1");
  if (max_epochs == 0) throw std::invalid_argument("max epochs must be at least 1");
  if (patience >= max_epochs) throw std::invalid_argument("patience must be below max epochs");
  if (!(learning_rate > 0.0)) throw std::invalid_argument("learning rate must be positive");
  if (!(clamp > 0.0)) throw std::invalid_argument("clamp must be positive");
  if (arch.widths.size() < 3) throw std::invalid_argument("architecture is not set");
}

TrainingDiverged::TrainingDiverged(std::size_t epoch, std::size_t batch)
    : std::runtime_error("training diverged at epoch " + std::to_string(epoch) + ", batch " +
                         std::to_string(batch)),
      epoch_(epoch),
      batch_(batch) {}

namespace {

constexpr std::size_t kLossChunk = 1024;

template <typename Fn>
double chunked_mean(std::size_t count, Fn&& term) {
  if (count == 0) throw std::invalid_argument("empirical loss over an empty sample");
  const std::size_t chunks = (count + kLossChunk - 1) / kLossChunk;
  std::vector<double> partial(chunks, 0.0);
  const auto total = static_cast<std::int64_t>(chunks);
#pragma omp parallel for schedule(static) if (chunks > 4)
  for (std::int64_t ci = 0; ci < total; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    const std::size_t end = std::min(count, (c + 1) * kLossChunk);
    double s = 0.0;
    for (std::size_t k = c * kLossChunk; k < end; ++k) s += term(k);
    partial[c] = s;
  }
  double sum = 0.0;
  for (double s : partial) sum += s;
  return sum / static_cast<double>(count);
}

}  // namespace

double empirical_loss(const SparseNetwork& net, const SampleSet& samples) {
  return chunked_mean(samples.size(), [&](std::size_t k) {
    const double r = samples.y[k] - net.forward(samples.point(k));
    return r * r;
  });
}

double empirical_loss(const ScalarField& f, const SampleSet& samples) {
  return chunked_mean(samples.size(), [&](std::size_t k) {
    const double r = samples.y[k] - f(samples.point(k));
    return r * r;
  });
}

TrainResult train(const TrainConfig& config, const SampleSet& train_samples,
                  const SampleSet& valid_samples, const RiskEvaluator* oracle,
                  const StepObserver& observer) {
  config.validate();
  if (train_samples.empty()) throw std::invalid_argument("empty training set");
  if (config.metric == TuningMetric::OracleRisk && oracle == nullptr) {
    throw std::invalid_argument("oracle-risk tuning needs the target function");
  }
  if (config.metric == TuningMetric::ValidationLoss && valid_samples.empty()) {
    throw std::invalid_argument("empty validation set");
  }
  if (train_samples.dim != config.arch.input_dim()) {
    throw std::invalid_argument("architecture input width does not match the data dimension");
  }

  const std::size_t budget = sparsity_budget(config.arch, config.s_ratio);
  SparseNetwork net(config.arch, budget, config.clamp, true);
  if (!config.zero_init) initialize_uniform(net, derive_seed(config.seed, {0}));
  AdamState adam(net.size(), AdamConfig{config.learning_rate});
  Engine shuffler = make_engine(derive_seed(config.seed, {1}));

  std::vector<std::size_t> order(train_samples.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  auto validate_metric = [&](const SparseNetwork& candidate) {
    if (config.metric == TuningMetric::OracleRisk) {
      return (*oracle)([&](std::span<const double> x) { return candidate.forward(x); }).value;
    }
    return empirical_loss(candidate, valid_samples);
  };

  TrainResult result{net, {}};
  TrainReport& report = result.report;
  report.budget = budget;
  report.best_validation = std::numeric_limits<double>::infinity();
  std::size_t since_best = 0;

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffler);
    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size, ++batch_index) {
      const std::size_t len = std::min(config.batch_size, order.size() - start);
      std::span<const std::size_t> batch(order.data() + start, len);
      LossGradient lg = backward(net, train_samples, batch);
      if (!std::isfinite(lg.loss)) throw TrainingDiverged(epoch, batch_index);
      adam_step(net, adam, lg.grad);
      project_sparsity(net, budget);
      clip_params(net);
      if (config.check_invariants && (net.nonzeros() > budget || net.max_abs() > 1.0)) {
        ++report.invariant_violations;
      }
      if (observer) observer(net, epoch, batch_index);
      loss_sum += lg.loss * static_cast<double>(len);
    }
    const double train_loss = loss_sum / static_cast<double>(order.size());
    const double val = validate_metric(net);
    if (!std::isfinite(val)) throw TrainingDiverged(epoch, batch_index);
    report.train_loss.push_back(train_loss);
    report.validation.push_back(val);
    report.epochs_run = epoch;

    if (config.progress) {
      *config.progress << "{\"epoch\":" << epoch << ",\"train_loss\":" << train_loss
                       << ",\"validation\":" << val << ",\"nonzeros\":" << net.nonzeros() << "}\n";
    }

    if (val < report.best_validation) {
      report.best_validation = val;
      report.best_epoch = epoch;
      result.net = net;
      since_best = 0;
    } else if (++since_best >= config.patience) {
      break;
    }
  }

  report.final_train_loss = report.train_loss.back();
  report.optimization_gap_proxy =
      report.final_train_loss - *std::min_element(report.train_loss.begin(), report.train_loss.end());
  return result;
}

TrainResult train(const TrainConfig& config, const DatasetSplit& split, const ScalarField* target,
                  const StepObserver& observer) {
  SampleSet train_samples = apply_mask(make_samples(split.train, split.component), config.mask_mode);
  if (config.metric == TuningMetric::OracleRisk) {
    if (target == nullptr) throw std::invalid_argument("oracle-risk tuning needs the target function");
    RiskEvaluator oracle(split.valid, *target);
    return train(config, train_samples, SampleSet{}, &oracle, observer);
  }
  SampleSet valid_samples = apply_mask(make_samples(split.valid, split.component), config.mask_mode);
  return train(config, train_samples, valid_samples, nullptr, observer);
}

}  // namespace driftnn
