#include "driftnn/sde.hpp"

#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>

#include "driftnn/binary_io.hpp"

namespace driftnn {

double bump(double z) noexcept {
  const double z2 = z * z;
  return 2.0 * z * std::exp(-z2) - 8.0 * z * std::exp(-2.0 * z2);
}

DriftSpec DriftSpec::paper_example(std::size_t d, double theta) {
  if (d == 0) throw std::invalid_argument("drift dimension must be positive");
  if (!(theta > 0.0)) throw std::invalid_argument("theta must be positive");
  DriftSpec s(DriftKind::PaperExample, d);
  s.theta_ = theta;
  s.id_ = "paper_example";
  return s;
}

DriftSpec DriftSpec::ornstein_uhlenbeck(std::size_t d) {
  if (d == 0) throw std::invalid_argument("drift dimension must be positive");
  DriftSpec s(DriftKind::OrnsteinUhlenbeck, d);
  s.id_ = "ou";
  return s;
}

DriftSpec DriftSpec::zero(std::size_t d) {
  if (d == 0) throw std::invalid_argument("drift dimension must be positive");
  DriftSpec s(DriftKind::Zero, d);
  s.id_ = "zero";
  return s;
}

DriftSpec DriftSpec::custom(std::size_t d, std::string id, VectorField field) {
  if (d == 0) throw std::invalid_argument("drift dimension must be positive");
  if (!field) throw std::invalid_argument("custom drift requires a callback");
  DriftSpec s(DriftKind::Custom, d);
  s.id_ = std::move(id);
  s.field_ = std::move(field);
  return s;
}

void DriftSpec::eval_into(std::span<const double> x, std::span<double> out) const {
  switch (kind_) {
    case DriftKind::PaperExample: {
      double sum = 0.0;
      for (double v : x) sum += v;
      const double shared = bump(sum / theta_);
      for (std::size_t i = 0; i < d_; ++i) out[i] = -x[i] + shared;
      return;
    }
    case DriftKind::OrnsteinUhlenbeck:
      for (std::size_t i = 0; i < d_; ++i) out[i] = -x[i];
      return;
    case DriftKind::Zero:
      for (std::size_t i = 0; i < d_; ++i) out[i] = 0.0;
      return;
    case DriftKind::Custom:
      field_(x, out);
      return;
  }
}

double DriftSpec::component(std::span<const double> x, std::size_t component) const {
  switch (kind_) {
    case DriftKind::PaperExample: {
      double sum = 0.0;
      for (double v : x) sum += v;
      return -x[component] + bump(sum / theta_);
    }
    case DriftKind::OrnsteinUhlenbeck:
      return -x[component];
    case DriftKind::Zero:
      return 0.0;
    case DriftKind::Custom: {
      std::vector<double> out(d_);
      field_(x, out);
      return out[component];
    }
  }
  return 0.0;
}

std::vector<double> evaluate_drift(const DriftSpec& spec, std::span<const double> x) {
  if (x.size() != spec.dim()) {
    throw std::invalid_argument("drift input has dimension " + std::to_string(x.size()) +
                                ", expected " + std::to_string(spec.dim()));
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("drift input is not finite");
  }
  std::vector<double> out(spec.dim());
  spec.eval_into(x, out);
  return out;
}

DiffusionSpec DiffusionSpec::identity(std::size_t d) {
  if (d == 0) throw std::invalid_argument("diffusion dimension must be positive");
  DiffusionSpec s(DiffusionKind::Identity, d);
  s.id_ = "identity";
  return s;
}

DiffusionSpec DiffusionSpec::constant(std::size_t d, std::vector<double> row_major) {
  if (d == 0) throw std::invalid_argument("diffusion dimension must be positive");
  if (row_major.size() != d * d) throw std::invalid_argument("diffusion matrix must be d x d");
  DiffusionSpec s(DiffusionKind::ConstantMatrix, d);
  s.matrix_ = std::move(row_major);
  s.id_ = "constant";
  return s;
}

DiffusionSpec DiffusionSpec::scaled_identity(std::size_t d, double c) {
  std::vector<double> m(d * d, 0.0);
  for (std::size_t i = 0; i < d; ++i) m[i * d + i] = c;
  return constant(d, std::move(m));
}

DiffusionSpec DiffusionSpec::custom(std::size_t d, std::string id, MatrixField field) {
  if (d == 0) throw std::invalid_argument("diffusion dimension must be positive");
  if (!field) throw std::invalid_argument("custom diffusion requires a callback");
  DiffusionSpec s(DiffusionKind::Custom, d);
  s.id_ = std::move(id);
  s.field_ = std::move(field);
  return s;
}

std::vector<double> DiffusionSpec::evaluate(std::span<const double> x) const {
  std::vector<double> m(d_ * d_, 0.0);
  switch (kind_) {
    case DiffusionKind::Identity:
      for (std::size_t i = 0; i < d_; ++i) m[i * d_ + i] = 1.0;
      break;
    case DiffusionKind::ConstantMatrix:
      m = matrix_;
      break;
    case DiffusionKind::Custom:
      field_(x, m);
      break;
  }
  return m;
}

void DiffusionSpec::apply(std::span<const double> x, std::span<const double> noise,
                          std::span<double> out, std::span<double> scratch) const {
  const double* sigma = nullptr;
  switch (kind_) {
    case DiffusionKind::Identity:
      for (std::size_t i = 0; i < d_; ++i) out[i] = noise[i];
      return;
    case DiffusionKind::ConstantMatrix:
      sigma = matrix_.data();
      break;
    case DiffusionKind::Custom:
      field_(x, scratch);
      sigma = scratch.data();
      break;
  }
  for (std::size_t i = 0; i < d_; ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < d_; ++j) acc += sigma[i * d_ + j] * noise[j];
    out[i] = acc;
  }
}

GridSpec::GridSpec(double T, std::size_t M) : horizon(T), steps(M) {
  if (!(T > 0.0) || !std::isfinite(T)) throw std::invalid_argument("grid horizon must be positive");
  if (M == 0) throw std::invalid_argument("grid must have at least one step");
}

double GridSpec::time(std::size_t m) const noexcept {
  if (m == steps) return horizon;
  return static_cast<double>(m) * dt();
}

SimulationDiverged::SimulationDiverged(std::size_t path, std::size_t step)
    : std::runtime_error("simulation diverged on path " + std::to_string(path) + " at step " +
                         std::to_string(step)),
      path_(path),
      step_(step) {}

namespace {

void check_inputs(const DriftSpec& drift, const DiffusionSpec& diffusion, const GridSpec& grid,
                  std::size_t paths, const InitialLaw& x0) {
  if (paths == 0) throw std::invalid_argument("need at least one path");
  if (grid.steps == 0) throw std::invalid_argument("grid must have at least one step");
  if (drift.dim() != diffusion.dim()) throw std::invalid_argument("drift/diffusion dimension mismatch");
  if (x0.kind == InitialLaw::Kind::Constant && x0.value.size() != drift.dim()) {
    throw std::invalid_argument("initial value has the wrong dimension");
  }
}

TrajectorySet allocate(const DriftSpec& drift, const DiffusionSpec& diffusion, const GridSpec& grid,
                       std::size_t paths, std::uint64_t seed) {
  TrajectorySet traj;
  traj.paths = paths;
  traj.dim = drift.dim();
  traj.grid = grid;
  traj.seed = seed;
  traj.drift_kind = drift.kind();
  traj.diffusion_kind = diffusion.kind();
  traj.states.assign(paths * (grid.steps + 1) * drift.dim(), 0.0);
  return traj;
}

/// Integrates one path in place. Returns the first step index whose state is
/// non-finite, or 0 when the path stayed finite.
std::size_t integrate_path(const DriftSpec& drift, const DiffusionSpec& diffusion,
                           const InitialLaw& x0, std::uint64_t seed, std::size_t n,
                           TrajectorySet& traj) {
  const std::size_t d = traj.dim;
  const std::size_t M = traj.grid.steps;
  const double dt = traj.grid.dt();
  const double sqrt_dt = std::sqrt(dt);

  Engine engine = make_engine(derive_seed(seed, {n}));
  std::normal_distribution<double> normal(0.0, 1.0);

  std::vector<double> b(d), noise(d), shock(d), scratch(d * d);

  auto start = traj.at(n, 0);
  if (x0.kind == InitialLaw::Kind::Constant) {
    for (std::size_t i = 0; i < d; ++i) start[i] = x0.value[i];
  } else {
    for (std::size_t i = 0; i < d; ++i) start[i] = normal(engine);
  }

  for (std::size_t m = 0; m < M; ++m) {
    auto cur = traj.at(n, m);
    auto next = traj.at(n, m + 1);
    drift.eval_into(cur, b);
    for (std::size_t i = 0; i < d; ++i) noise[i] = sqrt_dt * normal(engine);
    diffusion.apply(cur, noise, shock, scratch);
    for (std::size_t i = 0; i < d; ++i) {
      next[i] = cur[i] + b[i] * dt + shock[i];
      if (!std::isfinite(next[i])) return m + 1;
    }
  }
  return 0;
}

}  // namespace

TrajectorySet simulate_serial(const DriftSpec& drift, const DiffusionSpec& diffusion,
                              const GridSpec& grid, std::size_t paths, const InitialLaw& x0,
                              std::uint64_t seed) {
  check_inputs(drift, diffusion, grid, paths, x0);
  TrajectorySet traj = allocate(drift, diffusion, grid, paths, seed);
  for (std::size_t n = 0; n < paths; ++n) {
    if (std::size_t bad = integrate_path(drift, diffusion, x0, seed, n, traj); bad != 0) {
      throw SimulationDiverged(n, bad);
    }
  }
  return traj;
}

TrajectorySet simulate(const DriftSpec& drift, const DiffusionSpec& diffusion, const GridSpec& grid,
                       std::size_t paths, const InitialLaw& x0, std::uint64_t seed) {
  check_inputs(drift, diffusion, grid, paths, x0);
  TrajectorySet traj = allocate(drift, diffusion, grid, paths, seed);
  std::vector<std::size_t> failed_step(paths, 0);
  const auto count = static_cast<std::int64_t>(paths);

#pragma omp parallel for schedule(static)
  for (std::int64_t n = 0; n < count; ++n) {
    const auto idx = static_cast<std::size_t>(n);
    failed_step[idx] = integrate_path(drift, diffusion, x0, seed, idx, traj);
  }

  for (std::size_t n = 0; n < paths; ++n) {
    if (failed_step[n] != 0) throw SimulationDiverged(n, failed_step[n]);
  }
  return traj;
}

TrajectorySet subsample(const TrajectorySet& traj, std::size_t factor) {
  if (factor == 0 || traj.grid.steps % factor != 0) {
    throw std::invalid_argument("subsampling factor must divide the number of steps");
  }
  TrajectorySet out = traj;
  out.grid = GridSpec(traj.grid.horizon, traj.grid.steps / factor);
  out.states.assign(out.paths * out.points_per_path() * out.dim, 0.0);
  for (std::size_t n = 0; n < out.paths; ++n) {
    for (std::size_t m = 0; m <= out.grid.steps; ++m) {
      auto src = traj.at(n, m * factor);
      auto dst = out.at(n, m);
      std::copy(src.begin(), src.end(), dst.begin());
    }
  }
  return out;
}

namespace {
constexpr std::string_view kTrajMagic{"DNNTRAJ\0", 8};
}

void write_trajectories(std::ostream& out, const TrajectorySet& traj) {
  io::write_magic(out, kTrajMagic);
  io::write_u32(out, kTrajectoryFormatVersion);
  io::write_u64(out, traj.paths);
  io::write_u64(out, traj.grid.steps);
  io::write_u64(out, traj.dim);
  io::write_f64(out, traj.grid.dt());
  io::write_u64(out, traj.seed);
  io::write_u32(out, static_cast<std::uint32_t>(traj.drift_kind));
  io::write_u32(out, static_cast<std::uint32_t>(traj.diffusion_kind));
  io::write_f64(out, traj.grid.horizon);
  io::write_f64s(out, traj.states);
}

TrajectorySet read_trajectories(std::istream& in) {
  io::expect_magic(in, kTrajMagic);
  if (auto v = io::read_u32(in); v != kTrajectoryFormatVersion) {
    throw std::runtime_error("unsupported trajectory format version " + std::to_string(v));
  }
  TrajectorySet traj;
  traj.paths = io::read_u64(in);
  const std::size_t M = io::read_u64(in);
  traj.dim = io::read_u64(in);
  const double dt = io::read_f64(in);
  traj.seed = io::read_u64(in);
  traj.drift_kind = static_cast<DriftKind>(io::read_u32(in));
  traj.diffusion_kind = static_cast<DiffusionKind>(io::read_u32(in));
  const double T = io::read_f64(in);
  traj.grid = GridSpec(T, M);
  if (traj.grid.dt() != dt) throw std::runtime_error("trajectory header: inconsistent time step");
  traj.states.resize(traj.paths * (M + 1) * traj.dim);
  io::read_f64s(in, traj.states);
  return traj;
}

void write_trajectories(const std::string& path, const TrajectorySet& traj) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_trajectories(out, traj);
}

TrajectorySet read_trajectories(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_trajectories(in);
}

void write_trajectories_csv(std::ostream& out, const TrajectorySet& traj) {
  out << "path,step,t";
  for (std::size_t i = 1; i <= traj.dim; ++i) out << ",x_" << i;
  out << '\n';
  out.precision(17);
  for (std::size_t n = 0; n < traj.paths; ++n) {
    for (std::size_t m = 0; m <= traj.grid.steps; ++m) {
      out << n << ',' << m << ',' << traj.grid.time(m);
      for (double v : traj.at(n, m)) out << ',' << v;
      out << '\n';
    }
  }
}

}  // namespace driftnn
