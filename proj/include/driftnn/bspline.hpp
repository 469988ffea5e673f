#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "driftnn/dataset.hpp"
#include "driftnn/metrics.hpp"
#include "driftnn/network.hpp"

namespace driftnn {

/// Tensor-product cubic B-splines on [0,1]^d.
///
/// Each coordinate uses a clamped uniform knot vector that splits [0,1] into
/// K_N equal pieces (end knots repeated four times), which gives K_N + 3
/// univariate functions and (K_N + 3)^d tensor-product functions.
struct SplineBasisSpec {
  std::size_t knots = 1;  ///< K_N ≥ 1
  std::size_t dim = 1;
  static constexpr std::size_t degree = 3;

  SplineBasisSpec() = default;
  SplineBasisSpec(std::size_t k, std::size_t d);

  std::size_t per_dim() const noexcept { return knots + degree; }
  /// (K_N + 3)^d as a double, since it overflows quickly with d.
  double basis_count_real() const noexcept;
  /// (K_N + 3)^d; throws std::overflow_error beyond 2^63.
  std::size_t basis_count() const;
  /// Full knot vector, length K_N + 7.
  std::vector<double> knot_vector() const;
};

/// All K_N + 3 univariate basis values at x; the zero vector off [0,1].
std::vector<double> eval_basis_1d(const SplineBasisSpec& spec, double x);

/// The four possibly-nonzero univariate values at x ∈ [0,1] and the index of
/// the first one.
struct LocalBasis {
  std::size_t first = 0;
  std::array<double, 4> values{};
};
LocalBasis eval_local_basis(const SplineBasisSpec& spec, double x);

/// All (K_N + 3)^d tensor-product values at x (zero vector off [0,1]^d).
/// Coordinate 1 is the most significant index.
std::vector<double> eval_basis(const SplineBasisSpec& spec, std::span<const double> x);

struct SplineModel {
  SplineBasisSpec spec;
  double ridge = 0.0;       ///< λ requested
  double ridge_used = 0.0;  ///< λ actually used (differs after a singular fallback)
  std::vector<double> coef;
  std::string warning;

  /// B(x)ᵀc on [0,1]^d, 0 elsewhere.
  double predict(std::span<const double> x) const;
};

/// Normal equations accumulated over in-domain samples.
struct GramSystem {
  std::size_t size = 0;
  std::vector<double> gram;  ///< BᵀB, row-major size × size
  std::vector<double> rhs;   ///< Bᵀy
  std::size_t used = 0;      ///< in-domain samples
};

/// Accumulates in a fixed number of sample chunks reduced in order, so the
/// sums do not depend on the OpenMP thread count.
GramSystem accumulate_gram(const SampleSet& samples, const SplineBasisSpec& spec);
/// One pass in sample order; the reference for `accumulate_gram`.
GramSystem accumulate_gram_serial(const SampleSet& samples, const SplineBasisSpec& spec);

/// Bytes of the dense N·M × (K_N+3)^d design matrix in 64-bit floats.
double memory_estimate(std::size_t paths, std::size_t steps, const SplineBasisSpec& spec);
/// Bytes of the Gram system the streaming fit actually holds.
double gram_memory(const SplineBasisSpec& spec);
/// (parameters + batch·d)·8 bytes for the network estimator.
double nn_memory_estimate(const Architecture& arch, std::size_t batch_size);

class MemoryCapExceeded : public std::runtime_error {
 public:
  MemoryCapExceeded(double estimate_bytes, double cap_bytes);
  double estimate() const noexcept { return estimate_; }
  double cap() const noexcept { return cap_; }

 private:
  double estimate_;
  double cap_;
};

struct SplineFitOptions {
  double memory_cap_bytes = 2.0 * 1024 * 1024 * 1024;
};

/// Ridge least squares min Σ (y − B(x)ᵀc)² + λ‖c‖² over in-domain samples,
/// solved by Cholesky on the streamed normal equations. A singular system at
/// λ = 0 is refit with λ = 1e-10 and `warning` set. Refuses with
/// MemoryCapExceeded when memory_estimate exceeds the cap.
SplineModel fit_spline(const SampleSet& samples, const SplineBasisSpec& spec, double ridge,
                       const SplineFitOptions& options = {});

struct SplineCandidate {
  std::size_t knots = 0;
  double ridge = 0.0;
  bool feasible = false;
  double score = 0.0;
  std::string note;
};

struct SplineSelection {
  SplineModel model;
  double score = 0.0;
  std::vector<SplineCandidate> candidates;
};

/// Fits every (K_N, λ) pair and keeps the lowest validation loss; ties go to
/// the smaller K_N, then the smaller λ. `oracle`, when given, replaces the
/// validation loss with the risk against a known target.
SplineSelection select_knots(const SampleSet& train, const SampleSet& valid,
                             std::span<const std::size_t> knot_candidates,
                             std::span<const double> ridge_candidates,
                             const SplineFitOptions& options = {},
                             const RiskEvaluator* oracle = nullptr);

// Model file: "DNNSPLN\0" | u32 version | u64 d | u64 K_N | u64 degree | f64 λ |
// u64 p | f64 coefficients...
void write_spline_model(std::ostream& out, const SplineModel& model);
SplineModel read_spline_model(std::istream& in);

}  // namespace driftnn
