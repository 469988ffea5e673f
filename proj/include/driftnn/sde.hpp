#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftnn/rng.hpp"

namespace driftnn {

/// φ(z) = 2z·exp(−z²) − 8z·exp(−2z²), the oscillating bump of the benchmark drift.
double bump(double z) noexcept;

enum class DriftKind : std::uint32_t {
  PaperExample = 1,
  OrnsteinUhlenbeck = 2,
  Zero = 3,
  Custom = 4,
};

/// Writes b(x) into `out`. Both spans have length d.
using VectorField = std::function<void(std::span<const double> x, std::span<double> out)>;

/// Drift b: ℝ^d → ℝ^d of the diffusion dX = b(X)dt + σ(X)dB.
///
/// PaperExample is b(x) = −x + φ(Σᵢxᵢ / θ)·1_d. OrnsteinUhlenbeck is b(x) = −x.
class DriftSpec {
 public:
  static DriftSpec paper_example(std::size_t d, double theta = 0.2);
  static DriftSpec ornstein_uhlenbeck(std::size_t d);
  static DriftSpec zero(std::size_t d);
  static DriftSpec custom(std::size_t d, std::string id, VectorField field);

  DriftKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return d_; }
  double theta() const noexcept { return theta_; }
  const std::string& id() const noexcept { return id_; }

  /// Unchecked evaluation used inside the integrator.
  void eval_into(std::span<const double> x, std::span<double> out) const;

  /// Single component b^i(x), 0-based `component`.
  double component(std::span<const double> x, std::size_t component) const;

 private:
  DriftSpec(DriftKind kind, std::size_t d) : kind_(kind), d_(d) {}

  DriftKind kind_;
  std::size_t d_;
  double theta_ = 0.2;
  std::string id_;
  VectorField field_;
};

/// Checked drift evaluation. Throws std::invalid_argument on a dimension
/// mismatch or a non-finite input.
std::vector<double> evaluate_drift(const DriftSpec& spec, std::span<const double> x);

enum class DiffusionKind : std::uint32_t {
  Identity = 1,
  ConstantMatrix = 2,
  Custom = 3,
};

using MatrixField = std::function<void(std::span<const double> x, std::span<double> row_major_out)>;

/// Diffusion coefficient σ: ℝ^d → ℝ^{d×d}, row-major.
class DiffusionSpec {
 public:
  static DiffusionSpec identity(std::size_t d);
  static DiffusionSpec constant(std::size_t d, std::vector<double> row_major);
  static DiffusionSpec scaled_identity(std::size_t d, double c);
  static DiffusionSpec zero(std::size_t d) { return scaled_identity(d, 0.0); }
  static DiffusionSpec custom(std::size_t d, std::string id, MatrixField field);

  DiffusionKind kind() const noexcept { return kind_; }
  std::size_t dim() const noexcept { return d_; }
  const std::string& id() const noexcept { return id_; }

  std::vector<double> evaluate(std::span<const double> x) const;

  /// out = σ(x)·noise. `scratch` must hold d·d doubles.
  void apply(std::span<const double> x, std::span<const double> noise, std::span<double> out,
             std::span<double> scratch) const;

 private:
  DiffusionSpec(DiffusionKind kind, std::size_t d) : kind_(kind), d_(d) {}

  DiffusionKind kind_;
  std::size_t d_;
  std::vector<double> matrix_;
  std::string id_;
  MatrixField field_;
};

/// Equidistant observation grid t_m = m·Δ, Δ = T/M.
struct GridSpec {
  double horizon = 1.0;
  std::size_t steps = 100;

  GridSpec() = default;
  GridSpec(double T, std::size_t M);

  double dt() const noexcept { return horizon / static_cast<double>(steps); }
  /// Exact at m = M.
  double time(std::size_t m) const noexcept;

  bool operator==(const GridSpec&) const = default;
};

/// Law of X_0.
struct InitialLaw {
  enum class Kind { StandardNormal, Constant } kind = Kind::StandardNormal;
  std::vector<double> value;

  static InitialLaw standard_normal() { return {}; }
  static InitialLaw constant(std::vector<double> x0) { return {Kind::Constant, std::move(x0)}; }
};

/// N discretised sample paths stored row-major as [path][step][coord].
struct TrajectorySet {
  std::size_t paths = 0;
  std::size_t dim = 0;
  GridSpec grid;
  std::uint64_t seed = 0;
  DriftKind drift_kind = DriftKind::Zero;
  DiffusionKind diffusion_kind = DiffusionKind::Identity;
  std::vector<double> states;

  std::size_t steps() const noexcept { return grid.steps; }
  std::size_t points_per_path() const noexcept { return grid.steps + 1; }

  std::span<const double> at(std::size_t n, std::size_t m) const {
    return {states.data() + (n * points_per_path() + m) * dim, dim};
  }
  std::span<double> at(std::size_t n, std::size_t m) {
    return {states.data() + (n * points_per_path() + m) * dim, dim};
  }

  bool operator==(const TrajectorySet&) const = default;
};

/// Raised when the Euler–Maruyama recursion produces a non-finite state.
class SimulationDiverged : public std::runtime_error {
 public:
  SimulationDiverged(std::size_t path, std::size_t step);
  std::size_t path() const noexcept { return path_; }
  std::size_t step() const noexcept { return step_; }

 private:
  std::size_t path_;
  std::size_t step_;
};

/// Euler–Maruyama: X_{m+1} = X_m + b(X_m)Δ + σ(X_m)·√Δ·ξ_m, ξ_m ~ N(0, I_d).
/// Path n draws X_0 and all its increments from its own stream derived from
/// (seed, n), so the result does not depend on N or on the thread count.
/// Paths are integrated in parallel with OpenMP.
TrajectorySet simulate(const DriftSpec& drift, const DiffusionSpec& diffusion, const GridSpec& grid,
                       std::size_t paths, const InitialLaw& x0, std::uint64_t seed);

/// Single-threaded reference for `simulate`; bit-identical output.
TrajectorySet simulate_serial(const DriftSpec& drift, const DiffusionSpec& diffusion,
                              const GridSpec& grid, std::size_t paths, const InitialLaw& x0,
                              std::uint64_t seed);

/// Keeps every `factor`-th observation (factor must divide M).
TrajectorySet subsample(const TrajectorySet& traj, std::size_t factor);

// Trajectory container: magic "DNNTRAJ\0", u32 version, u64 N, M, d, f64 Δ,
// u64 seed, u32 drift tag, u32 diffusion tag, f64 T, then N·(M+1)·d f64 row-major.
inline constexpr std::uint32_t kTrajectoryFormatVersion = 1;

void write_trajectories(std::ostream& out, const TrajectorySet& traj);
TrajectorySet read_trajectories(std::istream& in);
void write_trajectories(const std::string& path, const TrajectorySet& traj);
TrajectorySet read_trajectories(const std::string& path);

/// CSV with columns path,step,t,x_1..x_d.
void write_trajectories_csv(std::ostream& out, const TrajectorySet& traj);

}  // namespace driftnn
