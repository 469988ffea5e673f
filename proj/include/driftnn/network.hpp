#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "driftnn/dataset.hpp"

namespace driftnn {

/// Layer widths p = (p₀ = d, p₁, …, p_L, p_{L+1} = 1).
///
/// Every layer j = 0..L computes z = W_j a − v_{j+1} with W_j of shape
/// p_{j+1} × p_j. Hidden layers apply ReLU; the output layer does not. When
/// `output_shift` is false the output layer carries no shift, which is the
/// bare network form; the default keeps it so the parameter count is
/// Σ_{i=0}^{L} (p_i + 1)·p_{i+1}.
struct Architecture {
  std::vector<std::size_t> widths;
  bool output_shift = true;

  Architecture() = default;
  explicit Architecture(std::vector<std::size_t> w, bool with_output_shift = true);

  /// (d, hidden..., 1).
  static Architecture from_hidden(std::size_t input_dim, const std::vector<std::size_t>& hidden,
                                  bool with_output_shift = true);

  std::size_t hidden_layers() const noexcept { return widths.size() - 2; }
  std::size_t input_dim() const noexcept { return widths.front(); }
  /// "5-16-32-16-1"
  std::string to_string() const;

  bool operator==(const Architecture&) const = default;
};

/// Number of weights plus shifts.
std::size_t count_params(const Architecture& arch);

/// s = ⌊s_ratio · count_params(arch)⌋, never below 2.
std::size_t sparsity_budget(const Architecture& arch, double s_ratio);

/// A member of the sparse ReLU class: at most `budget` nonzero parameters,
/// every parameter in [−1, 1], output clamped to [−F, F] and, with masking on,
/// multiplied by the indicator of [0,1]^d.
///
/// Parameters live in one flat vector, layer by layer: W_j row-major followed
/// by its shift vector. The flat index is also the tie-break order of
/// `project_sparsity`.
class SparseNetwork {
 public:
  SparseNetwork() = default;
  SparseNetwork(Architecture arch, std::size_t budget, double clamp = 10.0, bool masking = true);

  const Architecture& arch() const noexcept { return arch_; }
  std::size_t budget() const noexcept { return budget_; }
  double clamp() const noexcept { return clamp_; }
  bool masking() const noexcept { return masking_; }
  void set_masking(bool on) noexcept { masking_ = on; }
  void set_clamp(double F);
  void set_budget(std::size_t s);

  std::span<double> params() noexcept { return params_; }
  std::span<const double> params() const noexcept { return params_; }
  std::size_t size() const noexcept { return params_.size(); }

  std::size_t layers() const noexcept { return arch_.widths.size() - 1; }
  std::size_t weight_offset(std::size_t layer) const { return weight_offset_[layer]; }
  /// Offset of the shift applied after layer `layer`; `npos` if the layer has none.
  std::size_t shift_offset(std::size_t layer) const { return shift_offset_[layer]; }
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  double& weight(std::size_t layer, std::size_t row, std::size_t col);
  double& shift(std::size_t layer, std::size_t row);

  std::size_t nonzeros() const noexcept;
  double max_abs() const noexcept;

  /// Output before clamping and masking.
  double forward_raw(std::span<const double> x) const;
  /// Clamped, masked output.
  double forward(std::span<const double> x) const;

  bool operator==(const SparseNetwork&) const = default;

 private:
  Architecture arch_;
  std::size_t budget_ = 0;
  double clamp_ = 10.0;
  bool masking_ = true;
  std::vector<double> params_;
  std::vector<std::size_t> weight_offset_;
  std::vector<std::size_t> shift_offset_;
};

/// Free-function form of SparseNetwork::forward.
inline double forward(const SparseNetwork& net, std::span<const double> x) { return net.forward(x); }

/// Uniform(−1/√fan_in, 1/√fan_in) for every weight and shift, then clip and
/// project so the network starts inside its class.
void initialize_uniform(SparseNetwork& net, std::uint64_t seed);

struct LossGradient {
  double loss = 0.0;
  std::vector<double> grad;
};

/// Mean squared error (1/|B|)·Σ (y − f(x))² over the selected samples, and its
/// exact gradient with respect to every parameter.
///
/// ReLU subgradient at 0 is 0. The gradient through the clamp vanishes when
/// |pre-clamp output| ≥ F, and through the mask when x ∉ [0,1]^d.
/// The batch is split into fixed 64-sample chunks reduced in order, so the
/// result is identical for every OpenMP thread count.
LossGradient backward(const SparseNetwork& net, const SampleSet& samples,
                      std::span<const std::size_t> batch);
LossGradient backward(const SparseNetwork& net, const SampleSet& samples);

/// Sample-by-sample accumulation; the reference for `backward`.
LossGradient backward_serial(const SparseNetwork& net, const SampleSet& samples,
                             std::span<const std::size_t> batch);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  bool operator==(const AdamConfig&) const = default;
};

struct AdamState {
  AdamConfig config;
  std::vector<double> first_moment;
  std::vector<double> second_moment;
  std::uint64_t step = 0;

  AdamState() = default;
  AdamState(std::size_t param_count, AdamConfig cfg = {});

  bool operator==(const AdamState&) const = default;
};

/// Bias-corrected Adam update of every parameter.
void adam_step(SparseNetwork& net, AdamState& state, std::span<const double> grad);

/// Keeps the `s` largest-magnitude parameters and zeroes the rest. Equal
/// magnitudes are ranked by flat index, lower index first.
void project_sparsity(SparseNetwork& net, std::size_t s);
inline void project_sparsity(SparseNetwork& net) { project_sparsity(net, net.budget()); }

/// Clamps every parameter to [−1, 1].
void clip_params(SparseNetwork& net);

/// Flat-vector form of the projection, shared with tests and benchmarks.
void project_top_s(std::span<double> values, std::size_t s);

}  // namespace driftnn
