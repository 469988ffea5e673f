#include "driftnn/bspline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <sstream>

#include <Eigen/Cholesky>
#include <Eigen/Core>

#include "driftnn/binary_io.hpp"
#include "driftnn/trainer.hpp"

namespace driftnn {

SplineBasisSpec::SplineBasisSpec(std::size_t k, std::size_t d) : knots(k), dim(d) {
  if (k == 0) throw std::invalid_argument("need at least one knot interval");
  if (d == 0) throw std::invalid_argument("spline dimension must be positive");
}

double SplineBasisSpec::basis_count_real() const noexcept {
  return std::pow(static_cast<double>(per_dim()), static_cast<double>(dim));
}

std::size_t SplineBasisSpec::basis_count() const {
  std::size_t p = 1;
  for (std::size_t i = 0; i < dim; ++i) {
    if (p > (std::numeric_limits<std::size_t>::max() >> 1) / per_dim()) {
      throw std::overflow_error("tensor-product basis too large");
    }
    p *= per_dim();
  }
  return p;
}

std::vector<double> SplineBasisSpec::knot_vector() const {
  std::vector<double> t;
  t.reserve(knots + 7);
  for (int i = 0; i < 4; ++i) t.push_back(0.0);
  for (std::size_t j = 1; j < knots; ++j) t.push_back(static_cast<double>(j) / static_cast<double>(knots));
  for (int i = 0; i < 4; ++i) t.push_back(1.0);
  return t;
}

LocalBasis eval_local_basis(const SplineBasisSpec& spec, double x) {
  const std::size_t K = spec.knots;
  const double Kd = static_cast<double>(K);
  std::size_t interval = static_cast<std::size_t>(std::floor(x * Kd));
  if (interval >= K) interval = K - 1;

  // Knots around the span; clamped ends repeat 0 and 1.
  auto knot = [&](std::ptrdiff_t i) {
    // i indexes the full knot vector; interior knots sit at 4..K+2.
    if (i <= 3) return 0.0;
    if (i >= static_cast<std::ptrdiff_t>(K) + 3) return 1.0;
    return static_cast<double>(i - 3) / Kd;
  };
  const auto span = static_cast<std::ptrdiff_t>(interval) + 3;

  // Triangular de Boor recursion for the nonzero functions on the span.
  std::array<double, 4> N{1.0, 0.0, 0.0, 0.0};
  std::array<double, 4> left{}, right{};
  for (std::size_t j = 1; j <= 3; ++j) {
    left[j] = x - knot(span + 1 - static_cast<std::ptrdiff_t>(j));
    right[j] = knot(span + static_cast<std::ptrdiff_t>(j)) - x;
    double saved = 0.0;
    for (std::size_t r = 0; r < j; ++r) {
      const double denom = right[r + 1] + left[j - r];
      const double temp = N[r] / denom;
      N[r] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    N[j] = saved;
  }
  return {interval, N};
}

std::vector<double> eval_basis_1d(const SplineBasisSpec& spec, double x) {
  std::vector<double> out(spec.per_dim(), 0.0);
  if (!(x >= 0.0 && x <= 1.0)) return out;
  const auto local = eval_local_basis(spec, x);
  for (std::size_t r = 0; r < 4; ++r) out[local.first + r] = local.values[r];
  return out;
}

namespace {

constexpr std::size_t kMaxSplineDim = 16;

/// Calls fn(flat_index, value) for each of the 4^d possibly-nonzero
/// tensor-product functions at x (x must lie in [0,1]^d).
template <typename Fn>
void for_each_active(const SplineBasisSpec& spec, std::span<const double> x, Fn&& fn) {
  const std::size_t d = spec.dim;
  const std::size_t q = spec.per_dim();
  if (d > kMaxSplineDim) throw std::invalid_argument("tensor-product splines support at most 16 dimensions");
  std::array<LocalBasis, kMaxSplineDim> local{};
  for (std::size_t i = 0; i < d; ++i) local[i] = eval_local_basis(spec, x[i]);

  std::size_t total = 1;
  for (std::size_t i = 0; i < d; ++i) total *= 4;
  for (std::size_t combo = 0; combo < total; ++combo) {
    std::size_t flat = 0;
    double value = 1.0;
    for (std::size_t i = 0; i < d; ++i) {
      const std::size_t digit = (combo >> (2 * (d - 1 - i))) & 3u;
      flat = flat * q + local[i].first + digit;
      value *= local[i].values[digit];
    }
    fn(flat, value);
  }
}

void add_sample(const SplineBasisSpec& spec, std::span<const double> x, double y, GramSystem& sys,
                std::vector<std::size_t>& idx, std::vector<double>& val) {
  idx.clear();
  val.clear();
  for_each_active(spec, x, [&](std::size_t flat, double v) {
    if (v != 0.0) {
      idx.push_back(flat);
      val.push_back(v);
    }
  });
  const std::size_t p = sys.size;
  for (std::size_t a = 0; a < idx.size(); ++a) {
    sys.rhs[idx[a]] += val[a] * y;
    double* row = sys.gram.data() + idx[a] * p;
    for (std::size_t b = 0; b < idx.size(); ++b) row[idx[b]] += val[a] * val[b];
  }
  sys.used += 1;
}

GramSystem empty_system(const SplineBasisSpec& spec) {
  GramSystem sys;
  sys.size = spec.basis_count();
  sys.gram.assign(sys.size * sys.size, 0.0);
  sys.rhs.assign(sys.size, 0.0);
  return sys;
}

void check_dims(const SampleSet& samples, const SplineBasisSpec& spec) {
  if (samples.dim != spec.dim) throw std::invalid_argument("sample dimension does not match spline basis");
}

constexpr std::size_t kGramChunks = 16;

}  // namespace

std::vector<double> eval_basis(const SplineBasisSpec& spec, std::span<const double> x) {
  if (x.size() != spec.dim) throw std::invalid_argument("point dimension does not match spline basis");
  std::vector<double> out(spec.basis_count(), 0.0);
  if (!in_unit_cube(x)) return out;
  for_each_active(spec, x, [&](std::size_t flat, double v) { out[flat] += v; });
  return out;
}

double SplineModel::predict(std::span<const double> x) const {
  if (!in_unit_cube(x)) return 0.0;
  double acc = 0.0;
  for_each_active(spec, x, [&](std::size_t flat, double v) { acc += coef[flat] * v; });
  return acc;
}

GramSystem accumulate_gram_serial(const SampleSet& samples, const SplineBasisSpec& spec) {
  check_dims(samples, spec);
  GramSystem sys = empty_system(spec);
  std::vector<std::size_t> idx;
  std::vector<double> val;
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (!samples.in_domain[k]) continue;
    add_sample(spec, samples.point(k), samples.y[k], sys, idx, val);
  }
  return sys;
}

GramSystem accumulate_gram(const SampleSet& samples, const SplineBasisSpec& spec) {
  check_dims(samples, spec);
  const std::size_t n = samples.size();
  const std::size_t per_chunk = (n + kGramChunks - 1) / kGramChunks;
  std::vector<GramSystem> partial(kGramChunks);

#pragma omp parallel for schedule(static)
  for (std::int64_t ci = 0; ci < static_cast<std::int64_t>(kGramChunks); ++ci) {
    const auto c = static_cast<std::size_t>(ci);
    GramSystem sys = empty_system(spec);
    std::vector<std::size_t> idx;
    std::vector<double> val;
    const std::size_t begin = std::min(n, c * per_chunk);
    const std::size_t end = std::min(n, begin + per_chunk);
    for (std::size_t k = begin; k < end; ++k) {
      if (!samples.in_domain[k]) continue;
      add_sample(spec, samples.point(k), samples.y[k], sys, idx, val);
    }
    partial[c] = std::move(sys);
  }

  GramSystem total = empty_system(spec);
  for (const auto& part : partial) {
    for (std::size_t i = 0; i < total.gram.size(); ++i) total.gram[i] += part.gram[i];
    for (std::size_t i = 0; i < total.rhs.size(); ++i) total.rhs[i] += part.rhs[i];
    total.used += part.used;
  }
  return total;
}

double memory_estimate(std::size_t paths, std::size_t steps, const SplineBasisSpec& spec) {
  return static_cast<double>(paths) * static_cast<double>(steps) * spec.basis_count_real() * 8.0;
}

double gram_memory(const SplineBasisSpec& spec) {
  const double p = spec.basis_count_real();
  return (p * p + p) * 8.0;
}

double nn_memory_estimate(const Architecture& arch, std::size_t batch_size) {
  return static_cast<double>(count_params(arch) + batch_size * arch.input_dim()) * 8.0;
}

MemoryCapExceeded::MemoryCapExceeded(double estimate_bytes, double cap_bytes)
    : std::runtime_error([&] {
        std::ostringstream os;
        os.precision(4);
        os << "B-spline design matrix needs an estimated " << estimate_bytes / 1e9
           << " GB, above the memory cap of " << cap_bytes / 1e9 << " GB";
        return os.str();
      }()),
      estimate_(estimate_bytes),
      cap_(cap_bytes) {}

namespace {

/// Cholesky solve of (G + λI)c = rhs. Returns false when the factorization
/// reports a non-positive or negligible pivot.
bool solve_ridge(const GramSystem& sys, double ridge, std::vector<double>& coef) {
  const auto p = static_cast<Eigen::Index>(sys.size);
  Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> G(
      sys.gram.data(), p, p);
  Eigen::MatrixXd A = G;
  A.diagonal().array() += ridge;
  Eigen::LLT<Eigen::MatrixXd> llt(A);
  if (llt.info() != Eigen::Success) return false;
  const Eigen::VectorXd diag = llt.matrixL().toDenseMatrix().diagonal();
  const double max_diag = A.diagonal().maxCoeff();
  if (!(max_diag > 0.0) || diag.minCoeff() * diag.minCoeff() <= 1e-14 * max_diag) return false;
  Eigen::Map<const Eigen::VectorXd> b(sys.rhs.data(), p);
  Eigen::VectorXd c = llt.solve(b);
  coef.assign(c.data(), c.data() + p);
  return c.allFinite();
}

}  // namespace

SplineModel fit_spline(const SampleSet& samples, const SplineBasisSpec& spec, double ridge,
                       const SplineFitOptions& options) {
  if (samples.empty()) throw std::invalid_argument("cannot fit a spline to no samples");
  if (!(ridge >= 0.0)) throw std::invalid_argument("ridge must be nonnegative");
  check_dims(samples, spec);
  const double estimate = memory_estimate(samples.paths, samples.steps, spec);
  if (estimate > options.memory_cap_bytes) throw MemoryCapExceeded(estimate, options.memory_cap_bytes);

  const GramSystem sys = accumulate_gram(samples, spec);
  SplineModel model;
  model.spec = spec;
  model.ridge = ridge;
  model.ridge_used = ridge;
  if (!solve_ridge(sys, ridge, model.coef)) {
    if (ridge > 0.0) throw std::runtime_error("ridge normal equations are not positive definite");
    model.ridge_used = 1e-10;
    model.warning = "singular normal matrix at lambda=0; refit with lambda=1e-10";
    if (!solve_ridge(sys, model.ridge_used, model.coef)) {
      throw std::runtime_error("normal equations singular even after ridge fallback");
    }
  }
  return model;
}

SplineSelection select_knots(const SampleSet& train, const SampleSet& valid,
                             std::span<const std::size_t> knot_candidates,
                             std::span<const double> ridge_candidates, const SplineFitOptions& options,
                             const RiskEvaluator* oracle) {
  if (knot_candidates.empty() || ridge_candidates.empty()) {
    throw std::invalid_argument("candidate lists must be nonempty");
  }
  if (!oracle && valid.empty()) throw std::invalid_argument("empty validation set");

  std::vector<std::size_t> knots(knot_candidates.begin(), knot_candidates.end());
  std::vector<double> ridges(ridge_candidates.begin(), ridge_candidates.end());
  std::sort(knots.begin(), knots.end());
  std::sort(ridges.begin(), ridges.end());

  SplineSelection best;
  bool found = false;
  std::string last_refusal;
  for (std::size_t K : knots) {
    const SplineBasisSpec spec(K, train.dim);
    for (double lambda : ridges) {
      SplineCandidate cand{K, lambda, false, 0.0, {}};
      try {
        SplineModel model = fit_spline(train, spec, lambda, options);
        auto predictor = [&model](std::span<const double> x) { return model.predict(x); };
        cand.score = oracle ? (*oracle)(predictor).value : empirical_loss(predictor, valid);
        cand.feasible = true;
        cand.note = model.warning;
        if (!found || cand.score < best.score) {
          best.model = std::move(model);
          best.score = cand.score;
          found = true;
        }
      } catch (const MemoryCapExceeded& e) {
        cand.note = e.what();
        last_refusal = e.what();
      }
      best.candidates.push_back(std::move(cand));
    }
  }
  if (!found) {
    throw std::runtime_error("every spline candidate was refused: " + last_refusal);
  }
  return best;
}

namespace {
constexpr std::string_view kSplineMagic{"DNNSPLN\0", 8};
constexpr std::uint32_t kSplineVersion = 1;
}  // namespace

void write_spline_model(std::ostream& out, const SplineModel& model) {
  io::write_magic(out, kSplineMagic);
  io::write_u32(out, kSplineVersion);
  io::write_u64(out, model.spec.dim);
  io::write_u64(out, model.spec.knots);
  io::write_u64(out, SplineBasisSpec::degree);
  io::write_f64(out, model.ridge_used);
  io::write_u64(out, model.coef.size());
  io::write_f64s(out, model.coef);
}

SplineModel read_spline_model(std::istream& in) {
  io::expect_magic(in, kSplineMagic);
  if (auto v = io::read_u32(in); v != kSplineVersion) {
    throw std::runtime_error("unsupported spline model version " + std::to_string(v));
  }
  const std::size_t d = io::read_u64(in);
  const std::size_t K = io::read_u64(in);
  if (io::read_u64(in) != SplineBasisSpec::degree) throw std::runtime_error("only cubic splines are supported");
  SplineModel model;
  model.spec = SplineBasisSpec(K, d);
  model.ridge = model.ridge_used = io::read_f64(in);
  const std::size_t p = io::read_u64(in);
  if (p != model.spec.basis_count()) throw std::runtime_error("spline coefficient count mismatch");
  model.coef.resize(p);
  io::read_f64s(in, model.coef);
  return model;
}

}  // namespace driftnn
