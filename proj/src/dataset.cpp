#include "driftnn/dataset.hpp"

#include <ostream>
#include <stdexcept>
#include <string>

namespace driftnn {

bool in_unit_cube(std::span<const double> x) noexcept {
  for (double v : x) {
    if (!(v >= 0.0 && v <= 1.0)) return false;
  }
  return true;
}

RegressionSample SampleSet::sample(std::size_t k) const {
  auto p = point(k);
  return {std::vector<double>(p.begin(), p.end()), y[k], in_domain[k] != 0};
}

SampleSet make_samples(const TrajectorySet& traj, std::size_t component) {
  if (traj.paths == 0 || traj.states.empty()) throw std::invalid_argument("empty trajectory set");
  if (traj.grid.steps == 0) throw std::invalid_argument("trajectory set has no increments");
  if (component < 1 || component > traj.dim) {
    throw std::invalid_argument("component " + std::to_string(component) + " outside 1.." +
                                std::to_string(traj.dim));
  }
  const std::size_t d = traj.dim;
  const std::size_t M = traj.grid.steps;
  const std::size_t count = traj.paths * M;
  const std::size_t c = component - 1;
  const double dt = traj.grid.dt();

  SampleSet out;
  out.dim = d;
  out.paths = traj.paths;
  out.steps = M;
  out.dt = dt;
  out.x.resize(count * d);
  out.y.resize(count);
  out.in_domain.resize(count);
  out.path.resize(count);
  out.step.resize(count);

  for (std::size_t n = 0; n < traj.paths; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      const std::size_t k = n * M + m;
      auto cur = traj.at(n, m);
      auto next = traj.at(n, m + 1);
      std::copy(cur.begin(), cur.end(), out.x.begin() + static_cast<std::ptrdiff_t>(k * d));
      out.y[k] = (next[c] - cur[c]) / dt;
      out.in_domain[k] = in_unit_cube(cur) ? 1 : 0;
      out.path[k] = static_cast<std::uint32_t>(n);
      out.step[k] = static_cast<std::uint32_t>(m);
    }
  }
  return out;
}

SampleSet apply_mask(SampleSet samples, MaskMode mode) {
  if (mode == MaskMode::ClassExact) return samples;
  SampleSet out;
  out.dim = samples.dim;
  out.paths = samples.paths;
  out.steps = samples.steps;
  out.dt = samples.dt;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!samples.in_domain[k]) continue;
    auto p = samples.point(k);
    out.x.insert(out.x.end(), p.begin(), p.end());
    out.y.push_back(samples.y[k]);
    out.in_domain.push_back(1);
    out.path.push_back(samples.path[k]);
    out.step.push_back(samples.step[k]);
  }
  return out;
}

double restrict_target(const ScalarField& f, std::span<const double> x) {
  return in_unit_cube(x) ? f(x) : 0.0;
}

ScalarField drift_target(const DriftSpec& drift, std::size_t component) {
  if (component < 1 || component > drift.dim()) throw std::invalid_argument("bad drift component");
  return [drift, c = component - 1](std::span<const double> x) {
    return in_unit_cube(x) ? drift.component(x, c) : 0.0;
  };
}

DatasetSplit make_split(const DriftSpec& drift, const DiffusionSpec& diffusion, const GridSpec& grid,
                        const SplitSizes& sizes, const InitialLaw& x0, std::uint64_t seed,
                        std::size_t component) {
  if (component < 1 || component > drift.dim()) throw std::invalid_argument("bad drift component");
  DatasetSplit split;
  split.train = simulate(drift, diffusion, grid, sizes.train, x0, derive_seed(seed, {1}));
  split.valid = simulate(drift, diffusion, grid, sizes.valid, x0, derive_seed(seed, {2}));
  split.test = simulate(drift, diffusion, grid, sizes.test, x0, derive_seed(seed, {3}));
  split.component = component;
  return split;
}

void write_samples_csv(std::ostream& out, const SampleSet& samples) {
  out << "path,step";
  for (std::size_t i = 1; i <= samples.dim; ++i) out << ",x_" << i;
  out << ",y,in_domain\n";
  out.precision(17);
  for (std::size_t k = 0; k < samples.size(); ++k) {
    out << samples.path[k] << ',' << samples.step[k];
    for (double v : samples.point(k)) out << ',' << v;
    out << ',' << samples.y[k] << ',' << int{samples.in_domain[k]} << '\n';
  }
}

}  // namespace driftnn
