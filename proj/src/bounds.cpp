#include "driftnn/bounds.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace driftnn::bounds {

void CompositionSpec::validate() const {
  if (beta.empty()) throw std::invalid_argument("composition needs at least one layer");
  if (t.size() != beta.size()) throw std::invalid_argument("t and beta must have q+1 entries");
  if (!dims.empty() && dims.size() != beta.size() + 1) {
    throw std::invalid_argument("dims must have q+2 entries");
  }
  for (double b : beta) {
    if (!(b > 0.0)) throw std::invalid_argument("smoothness must be positive");
  }
  for (double ti : t) {
    if (!(ti > 0.0)) throw std::invalid_argument("effective dimensions must be positive");
  }
}

BoundInputs::BoundInputs(std::size_t s_, std::size_t L_, std::size_t d_, double F_, double N_,
                         double dt_, double delta_, double drift_sup)
    : s(s_), L(L_), d(d_), F(F_), N(N_), dt(dt_), delta(delta_) {
  if (s < 2) throw std::invalid_argument("need s >= 2");
  if (L < 1) throw std::invalid_argument("need L >= 1");
  if (d < 1) throw std::invalid_argument("need d >= 1");
  if (!(N >= 2.0)) throw std::invalid_argument("need N >= 2");
  if (!(dt >= 0.0 && dt <= 1.0)) throw std::invalid_argument("need 0 <= dt <= 1");
  if (!(F >= std::max(drift_sup, 1.0))) throw std::invalid_argument("need F >= max(C_b, 1)");
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("need delta in (0, 1]");
}

double covering_log_bound(std::size_t s, std::size_t L, std::size_t d, double delta, double C) {
  if (!(delta > 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in (0, 1]");
  if (s < 2) throw std::invalid_argument("need s >= 2");
  const double sd = static_cast<double>(s);
  return C * sd *
         (static_cast<double>(L) * std::log(sd) + std::log(static_cast<double>(d)) - std::log(delta));
}

std::vector<double> effective_smoothness(const CompositionSpec& spec) {
  spec.validate();
  const std::size_t layers = spec.beta.size();
  std::vector<double> out(layers);
  double tail = 1.0;
  for (std::size_t i = layers; i-- > 0;) {
    out[i] = spec.beta[i] * tail;
    tail *= std::min(spec.beta[i], 1.0);
  }
  return out;
}

double phi_n(const CompositionSpec& spec, double N) {
  if (!(N >= 2.0)) throw std::invalid_argument("need N >= 2");
  const auto star = effective_smoothness(spec);
  double best = 0.0;
  for (std::size_t i = 0; i < star.size(); ++i) {
    const double rate = 2.0 * star[i] / (2.0 * star[i] + spec.t[i]);
    best = std::max(best, std::pow(N, -rate));
  }
  return best;
}

TheoremTerms theorem_terms(const BoundInputs& in, double psi, double approx, double c_frak) {
  if (psi < 0.0 || approx < 0.0) throw std::invalid_argument("psi and approx must be nonnegative");
  const double s = static_cast<double>(in.s);
  const double L = static_cast<double>(in.L);
  const double scale = c_frak * in.F * in.F;
  TheoremTerms t;
  t.optimization = 4.0 * psi;
  t.approximation = 6.0 * approx;
  t.discretization = scale * in.dt;
  t.complexity = scale * (s * (L * std::log(s) + std::log(static_cast<double>(in.d))) +
                          s * std::log(4.0 * in.F)) /
                 in.N;
  t.sample = scale * s * std::log(in.N) / in.N;
  t.total = t.optimization + t.approximation + t.discretization + t.complexity + t.sample;
  return t;
}

double envelope(double N, double C) {
  if (!(N >= 2.0)) throw std::invalid_argument("need N >= 2");
  const double l = std::log(N);
  return C * l * l * l / N;
}

int holder_floor(double beta) {
  if (!(beta > 0.0)) throw std::invalid_argument("smoothness must be positive");
  return static_cast<int>(std::ceil(beta)) - 1;
}

}  // namespace driftnn::bounds
