#pragma once

#include <cstddef>
#include <vector>

namespace driftnn::bounds {

// Computable pieces of the risk analysis. The universal constants are not
// known, so every bound takes them as inputs (default 1) and is meaningful
// only up to those constants. Logarithms are natural.

/// Parameters of a composition g_q ∘ … ∘ g₀ of Hölder maps: g_i has β_i
/// smoothness and depends on t_i of its d_i inputs.
struct CompositionSpec {
  std::vector<std::size_t> dims;  ///< d₀..d_{q+1}
  std::vector<double> t;          ///< t₀..t_q
  std::vector<double> beta;       ///< β₀..β_q
  double K = 1.0;

  std::size_t q() const noexcept { return beta.empty() ? 0 : beta.size() - 1; }
  /// Throws std::invalid_argument on inconsistent lengths or nonpositive t, β.
  void validate() const;
};

/// Structural inputs of the risk bound, validated on construction:
/// F ≥ max(C_b, 1), s ≥ 2, L ≥ 1, N ≥ 2, 0 < Δ ≤ 1 (Δ = 0 allowed for the
/// pure sampling terms), δ ∈ (0, 1].
struct BoundInputs {
  std::size_t s = 2;
  std::size_t L = 1;
  std::size_t d = 1;
  double F = 1.0;
  double N = 2.0;
  double dt = 0.0;
  double delta = 0.5;

  BoundInputs() = default;
  BoundInputs(std::size_t s, std::size_t L, std::size_t d, double F, double N, double dt,
              double delta = 0.5, double drift_sup = 0.0);
};

/// C·s·(L·log s + log d − log δ), the log covering number bound of the sparse class.
double covering_log_bound(std::size_t s, std::size_t L, std::size_t d, double delta, double C = 1.0);
inline double covering_log_bound(const BoundInputs& in, double C = 1.0) {
  return covering_log_bound(in.s, in.L, in.d, in.delta, C);
}

/// β*ᵢ = βᵢ·Π_{l>i}(β_l ∧ 1).
std::vector<double> effective_smoothness(const CompositionSpec& spec);

/// φ_N = maxᵢ N^{−2β*ᵢ/(2β*ᵢ+tᵢ)}.
double phi_n(const CompositionSpec& spec, double N);

struct TheoremTerms {
  double optimization = 0.0;   ///< 4·Ψ
  double approximation = 0.0;  ///< 6·inf risk
  double discretization = 0.0; ///< 𝔠F²Δ
  double complexity = 0.0;     ///< 𝔠F²(s(L log s + log d) + s log 4F)/N
  double sample = 0.0;         ///< 𝔠F²·s log N / N
  double total = 0.0;
};

TheoremTerms theorem_terms(const BoundInputs& in, double psi, double approx, double c_frak = 1.0);

/// 4Ψ + 6·approx + 𝔠F²(Δ + (s(L log s + log d) + s log 4F)/N + s log N / N).
inline double theorem_bound(const BoundInputs& in, double psi, double approx, double c_frak = 1.0) {
  return theorem_terms(in, psi, approx, c_frak).total;
}

/// C·log³(N)/N.
double envelope(double N, double C = 1.0);

/// Largest integer strictly smaller than β (so holder_floor(2) = 1).
int holder_floor(double beta);

}  // namespace driftnn::bounds
