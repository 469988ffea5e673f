#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <vector>

#include "driftnn/sde.hpp"

namespace driftnn {

/// Real-valued function on ℝ^d.
using ScalarField = std::function<double(std::span<const double>)>;

/// Which samples enter the training loss.
enum class MaskMode {
  ClassExact,  ///< keep every sample; the masked estimator predicts 0 off [0,1]^d
  DomainOnly,  ///< drop samples whose state lies outside [0,1]^d
};

bool in_unit_cube(std::span<const double> x) noexcept;

/// (X̄_{t_m}, Y_{t_m}) with Y_{t_m} = (X̄^i_{t_{m+1}} − X̄^i_{t_m}) / Δ.
struct RegressionSample {
  std::vector<double> x;
  double y = 0.0;
  bool in_domain = false;
};

/// Regression samples of one trajectory set, stored column-wise.
/// Sample k corresponds to (path, step) = (k / M, k % M) unless filtered.
struct SampleSet {
  std::size_t dim = 0;
  std::size_t paths = 0;  ///< N of the source trajectories
  std::size_t steps = 0;  ///< M of the source grid
  double dt = 0.0;
  std::vector<double> x;  ///< size() · dim, row-major
  std::vector<double> y;
  std::vector<std::uint8_t> in_domain;
  std::vector<std::uint32_t> path;
  std::vector<std::uint32_t> step;

  std::size_t size() const noexcept { return y.size(); }
  bool empty() const noexcept { return y.empty(); }
  std::span<const double> point(std::size_t k) const { return {x.data() + k * dim, dim}; }
  RegressionSample sample(std::size_t k) const;
};

/// Builds the N·M increment samples for component `component` (1-based).
/// Throws std::invalid_argument on an empty set or a bad component.
SampleSet make_samples(const TrajectorySet& traj, std::size_t component);

/// DomainOnly drops out-of-domain samples; ClassExact returns the input unchanged.
SampleSet apply_mask(SampleSet samples, MaskMode mode);

/// f₀ = f·1_{[0,1]^d} evaluated at x.
double restrict_target(const ScalarField& f, std::span<const double> x);

/// The estimation target x ↦ b^i(x)·1_{[0,1]^d}(x), component 1-based.
ScalarField drift_target(const DriftSpec& drift, std::size_t component);

/// Train, validation and test trajectories drawn from disjoint seed streams.
struct DatasetSplit {
  TrajectorySet train;
  TrajectorySet valid;
  TrajectorySet test;
  std::size_t component = 1;
};

struct SplitSizes {
  std::size_t train = 100;
  std::size_t valid = 1000;
  std::size_t test = 1000;
};

DatasetSplit make_split(const DriftSpec& drift, const DiffusionSpec& diffusion, const GridSpec& grid,
                        const SplitSizes& sizes, const InitialLaw& x0, std::uint64_t seed,
                        std::size_t component = 1);

/// CSV with columns path,step,x_1..x_d,y,in_domain.
void write_samples_csv(std::ostream& out, const SampleSet& samples);

}  // namespace driftnn
