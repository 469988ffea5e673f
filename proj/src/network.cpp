#include "driftnn/network.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

#include "driftnn/rng.hpp"

namespace driftnn {

Architecture::Architecture(std::vector<std::size_t> w, bool with_output_shift)
    : widths(std::move(w)), output_shift(with_output_shift) {
  if (widths.size() < 3) throw std::invalid_argument("architecture needs at least one hidden layer");
  if (widths.back() != 1) throw std::invalid_argument("architecture output width must be 1");
  for (std::size_t p : widths) {
    if (p == 0) throw std::invalid_argument("layer widths must be positive");
  }
}

Architecture Architecture::from_hidden(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                       bool with_output_shift) {
  std::vector<std::size_t> w;
  w.reserve(hidden.size() + 2);
  w.push_back(input_dim);
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(1);
  return Architecture(std::move(w), with_output_shift);
}

std::string Architecture::to_string() const {
  std::string s;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) s += '-';
    s += std::to_string(widths[i]);
  }
  return s;
}

std::size_t count_params(const Architecture& arch) {
  std::size_t total = 0;
  for (std::size_t i = 0; i + 1 < arch.widths.size(); ++i) {
    total += (arch.widths[i] + 1) * arch.widths[i + 1];
  }
  if (!arch.output_shift) total -= 1;
  return total;
}

std::size_t sparsity_budget(const Architecture& arch, double s_ratio) {
  if (!(s_ratio > 0.0 && s_ratio <= 1.0)) throw std::invalid_argument("s_ratio must lie in (0, 1]");
  const auto s = static_cast<std::size_t>(std::floor(s_ratio * static_cast<double>(count_params(arch))));
  return std::max<std::size_t>(s, 2);
}

SparseNetwork::SparseNetwork(Architecture arch, std::size_t budget, double clamp, bool masking)
    : arch_(std::move(arch)), budget_(budget), clamp_(clamp), masking_(masking) {
  if (arch_.widths.size() < 3) throw std::invalid_argument("architecture needs at least one hidden layer");
  if (budget_ < 2) throw std::invalid_argument("sparsity budget must be at least 2");
  if (!(clamp_ > 0.0)) throw std::invalid_argument("output clamp must be positive");
  const std::size_t L1 = arch_.widths.size() - 1;
  weight_offset_.resize(L1);
  shift_offset_.resize(L1);
  std::size_t off = 0;
  for (std::size_t j = 0; j < L1; ++j) {
    weight_offset_[j] = off;
    off += arch_.widths[j + 1] * arch_.widths[j];
    const bool has_shift = j + 1 < L1 || arch_.output_shift;
    shift_offset_[j] = has_shift ? off : npos;
    if (has_shift) off += arch_.widths[j + 1];
  }
  params_.assign(off, 0.0);
}

void SparseNetwork::set_clamp(double F) {
  if (!(F > 0.0)) throw std::invalid_argument("output clamp must be positive");
  clamp_ = F;
}

void SparseNetwork::set_budget(std::size_t s) {
  if (s < 2) throw std::invalid_argument("sparsity budget must be at least 2");
  budget_ = s;
}

double& SparseNetwork::weight(std::size_t layer, std::size_t row, std::size_t col) {
  return params_[weight_offset_[layer] + row * arch_.widths[layer] + col];
}

double& SparseNetwork::shift(std::size_t layer, std::size_t row) {
  if (shift_offset_[layer] == npos) throw std::out_of_range("layer has no shift vector");
  return params_[shift_offset_[layer] + row];
}

std::size_t SparseNetwork::nonzeros() const noexcept {
  return static_cast<std::size_t>(
      std::count_if(params_.begin(), params_.end(), [](double v) { return v != 0.0; }));
}

double SparseNetwork::max_abs() const noexcept {
  double m = 0.0;
  for (double v : params_) m = std::max(m, std::abs(v));
  return m;
}

namespace {

std::size_t max_width(const Architecture& arch) {
  return *std::max_element(arch.widths.begin(), arch.widths.end());
}

/// Computes every layer's pre-activation z_j into `pre` (layer-major, stride
/// max width) and returns the raw output.
double run_layers(const SparseNetwork& net, std::span<const double> x, std::vector<double>& pre,
                  std::vector<double>& act) {
  const auto& w = net.arch().widths;
  const std::size_t stride = max_width(net.arch());
  const std::size_t L1 = w.size() - 1;
  const auto params = net.params();
  pre.resize(L1 * stride);
  act.resize(w.size() * stride);
  std::copy(x.begin(), x.end(), act.begin());

  for (std::size_t j = 0; j < L1; ++j) {
    const std::size_t rows = w[j + 1];
    const std::size_t cols = w[j];
    const double* W = params.data() + net.weight_offset(j);
    const double* a = act.data() + j * stride;
    double* z = pre.data() + j * stride;
    double* next = act.data() + (j + 1) * stride;
    const std::size_t so = net.shift_offset(j);
    for (std::size_t r = 0; r < rows; ++r) {
      double acc = 0.0;
      const double* row = W + r * cols;
      for (std::size_t c = 0; c < cols; ++c) acc += row[c] * a[c];
      if (so != SparseNetwork::npos) acc -= params[so + r];
      z[r] = acc;
      next[r] = (j + 1 < L1) ? (acc > 0.0 ? acc : 0.0) : acc;
    }
  }
  return pre[(L1 - 1) * stride];
}

struct Scratch {
  std::vector<double> pre, act, delta, delta_next;
};

thread_local Scratch tls_scratch;

/// Adds the gradient of (f(x) − y)² · weight into `grad` and returns the
/// squared residual.
double accumulate_sample(const SparseNetwork& net, std::span<const double> x, double y,
                         bool in_domain, double weight, std::span<double> grad, Scratch& s) {
  if (net.masking() && !in_domain) return y * y;

  const double raw = run_layers(net, x, s.pre, s.act);
  const double F = net.clamp();
  const bool saturated = !(raw > -F && raw < F);
  const double out = saturated ? std::clamp(raw, -F, F) : raw;
  const double resid = out - y;
  if (saturated) return resid * resid;

  const auto& w = net.arch().widths;
  const std::size_t stride = max_width(net.arch());
  const std::size_t L1 = w.size() - 1;
  const auto params = net.params();

  s.delta.assign(stride, 0.0);
  s.delta_next.assign(stride, 0.0);
  s.delta[0] = 2.0 * resid * weight;

  for (std::size_t jj = L1; jj-- > 0;) {
    const std::size_t rows = w[jj + 1];
    const std::size_t cols = w[jj];
    const double* a = s.act.data() + jj * stride;
    double* gW = grad.data() + net.weight_offset(jj);
    const std::size_t so = net.shift_offset(jj);
    for (std::size_t r = 0; r < rows; ++r) {
      const double dr = s.delta[r];
      if (dr == 0.0) continue;
      double* grow = gW + r * cols;
      for (std::size_t c = 0; c < cols; ++c) grow[c] += dr * a[c];
      if (so != SparseNetwork::npos) grad[so + r] -= dr;
    }
    if (jj == 0) break;
    const double* W = params.data() + net.weight_offset(jj);
    const double* zprev = s.pre.data() + (jj - 1) * stride;
    for (std::size_t c = 0; c < cols; ++c) s.delta_next[c] = 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double dr = s.delta[r];
      if (dr == 0.0) continue;
      const double* row = W + r * cols;
      for (std::size_t c = 0; c < cols; ++c) s.delta_next[c] += row[c] * dr;
    }
    for (std::size_t c = 0; c < cols; ++c) {
      s.delta[c] = zprev[c] > 0.0 ? s.delta_next[c] : 0.0;
    }
  }
  return resid * resid;
}

constexpr std::size_t kChunk = 64;

}  // namespace

double SparseNetwork::forward_raw(std::span<const double> x) const {
  if (x.size() != arch_.input_dim()) throw std::invalid_argument("network input has the wrong dimension");
  return run_layers(*this, x, tls_scratch.pre, tls_scratch.act);
}

double SparseNetwork::forward(std::span<const double> x) const {
  if (masking_ && !in_unit_cube(x)) return 0.0;
  return std::clamp(forward_raw(x), -clamp_, clamp_);
}

void initialize_uniform(SparseNetwork& net, std::uint64_t seed) {
  Engine engine = make_engine(seed);
  const auto& w = net.arch().widths;
  auto params = net.params();
  for (std::size_t j = 0; j + 1 < w.size(); ++j) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(w[j]));
    std::uniform_real_distribution<double> dist(-bound, bound);
    const std::size_t wo = net.weight_offset(j);
    for (std::size_t k = 0; k < w[j + 1] * w[j]; ++k) params[wo + k] = dist(engine);
    if (const std::size_t so = net.shift_offset(j); so != SparseNetwork::npos) {
      for (std::size_t k = 0; k < w[j + 1]; ++k) params[so + k] = dist(engine);
    }
  }
  project_sparsity(net);
  clip_params(net);
}

LossGradient backward_serial(const SparseNetwork& net, const SampleSet& samples,
                             std::span<const std::size_t> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  LossGradient out;
  out.grad.assign(net.size(), 0.0);
  const double weight = 1.0 / static_cast<double>(batch.size());
  Scratch scratch;
  double sum = 0.0;
  for (std::size_t k : batch) {
    sum += accumulate_sample(net, samples.point(k), samples.y[k], samples.in_domain[k] != 0, weight,
                             out.grad, scratch);
  }
  out.loss = sum * weight;
  return out;
}

LossGradient backward(const SparseNetwork& net, const SampleSet& samples,
                      std::span<const std::size_t> batch) {
  if (batch.empty()) throw std::invalid_argument("empty batch");
  const std::size_t chunks = (batch.size() + kChunk - 1) / kChunk;
  const std::size_t P = net.size();
  const double weight = 1.0 / static_cast<double>(batch.size());

  std::vector<double> partial_grad(chunks * P, 0.0);
  std::vector<double> partial_loss(chunks, 0.0);
  const auto count = static_cast<std::int64_t>(chunks);

#pragma omp parallel for schedule(static) if (chunks > 4)
  for (std::int64_t ci = 0; ci < count; ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    std::span<double> g(partial_grad.data() + c * P, P);
    const std::size_t end = std::min(batch.size(), (c + 1) * kChunk);
    double sum = 0.0;
    for (std::size_t b = c * kChunk; b < end; ++b) {
      const std::size_t k = batch[b];
      sum += accumulate_sample(net, samples.point(k), samples.y[k], samples.in_domain[k] != 0,
                               weight, g, tls_scratch);
    }
    partial_loss[c] = sum;
  }

  LossGradient out;
  out.grad.assign(P, 0.0);
  double sum = 0.0;
  for (std::size_t c = 0; c < chunks; ++c) {
    sum += partial_loss[c];
    const double* g = partial_grad.data() + c * P;
    for (std::size_t p = 0; p < P; ++p) out.grad[p] += g[p];
  }
  out.loss = sum * weight;
  return out;
}

LossGradient backward(const SparseNetwork& net, const SampleSet& samples) {
  std::vector<std::size_t> all(samples.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return backward(net, samples, all);
}

AdamState::AdamState(std::size_t param_count, AdamConfig cfg)
    : config(cfg), first_moment(param_count, 0.0), second_moment(param_count, 0.0) {}

void adam_step(SparseNetwork& net, AdamState& state, std::span<const double> grad) {
  auto params = net.params();
  if (grad.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw std::invalid_argument("adam_step: shape mismatch");
  }
  const auto& c = state.config;
  state.step += 1;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(c.beta1, t);
  const double bias2 = 1.0 - std::pow(c.beta2, t);
  for (std::size_t p = 0; p < params.size(); ++p) {
    const double g = grad[p];
    double& m = state.first_moment[p];
    double& v = state.second_moment[p];
    m = c.beta1 * m + (1.0 - c.beta1) * g;
    v = c.beta2 * v + (1.0 - c.beta2) * g * g;
    const double m_hat = m / bias1;
    const double v_hat = v / bias2;
    params[p] -= c.learning_rate * m_hat / (std::sqrt(v_hat) + c.epsilon);
  }
}

void project_top_s(std::span<double> values, std::size_t s) {
  const std::size_t nz = static_cast<std::size_t>(
      std::count_if(values.begin(), values.end(), [](double v) { return v != 0.0; }));
  if (nz <= s) return;

  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto ranks_before = [&](std::size_t a, std::size_t b) {
    const double ma = std::abs(values[a]);
    const double mb = std::abs(values[b]);
    return ma > mb || (ma == mb && a < b);
  };
  std::nth_element(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(s), order.end(),
                   ranks_before);
  for (auto it = order.begin() + static_cast<std::ptrdiff_t>(s); it != order.end(); ++it) {
    values[*it] = 0.0;
  }
}

void project_sparsity(SparseNetwork& net, std::size_t s) {
  if (s < 2) throw std::invalid_argument("sparsity budget must be at least 2");
  project_top_s(net.params(), s);
}

void clip_params(SparseNetwork& net) {
  for (double& v : net.params()) v = std::clamp(v, -1.0, 1.0);
}

}  // namespace driftnn
