#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "driftnn/dataset.hpp"

namespace driftnn {

struct RiskEstimate {
  double value = 0.0;
  std::size_t test_paths = 0;
  std::size_t steps = 0;
};

/// (1/(M·N′)) ΣₙΣ_{m<M} (f̂(X̃ₙ,ₘ) − f₀(X̃ₙ,ₘ))², both functions masked to [0,1]^d.
/// Paths are evaluated in parallel and reduced in path order.
RiskEstimate empirical_risk(const ScalarField& estimate, const ScalarField& target,
                            const TrajectorySet& test);

/// Single loop reference for `empirical_risk`.
RiskEstimate empirical_risk_serial(const ScalarField& estimate, const ScalarField& target,
                                   const TrajectorySet& test);

/// Caches the in-domain test points and the target values there, so repeated
/// risk evaluations (e.g. once per training epoch) only touch points where
/// either masked function can be nonzero.
class RiskEvaluator {
 public:
  RiskEvaluator(const TrajectorySet& test, const ScalarField& target);

  RiskEstimate operator()(const ScalarField& estimate) const;

  std::size_t in_domain_points() const noexcept { return target_.size(); }

 private:
  std::size_t dim_ = 0;
  std::size_t paths_ = 0;
  std::size_t steps_ = 0;
  std::vector<double> points_;
  std::vector<double> target_;
};

/// Regularized incomplete beta I_x(a, b).
double incomplete_beta(double a, double b, double x);
double student_t_cdf(double t, double dof);
/// Inverse CDF by bisection on `student_t_cdf`.
double student_t_quantile(double p, double dof);

struct AggregateResult {
  double mean = 0.0;
  double std_error = 0.0;  ///< τ = sd / √J
  double quantile = 0.0;   ///< t_{0.975}^{(J−1)}
  double half_width = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  std::size_t reps = 0;
  std::vector<double> errors;
};

/// Mean with a two-sided 95% Student-t interval. Requires J ≥ 2.
AggregateResult aggregate(std::span<const double> errors);

struct RatePoint {
  double n = 0.0;
  double error = 0.0;
};

struct RateFit {
  double slope = 0.0;
  double intercept = 0.0;
  double r2 = 0.0;
  /// Smallest C with C·log³N/N ≥ error at every point.
  double envelope_constant = 0.0;
};

/// Least squares of log error on log N.
RateFit fit_rate(std::span<const RatePoint> points);

/// One line of the aggregates CSV.
struct AggregateRow {
  std::string method;
  std::size_t n = 0;
  std::size_t d = 0;
  AggregateResult result;
};

void write_aggregates_csv(std::ostream& out, std::span<const AggregateRow> rows);

/// log–log plot data for one (method, d) series: N,mean,lower,upper,envelope.
void write_plot_csv(std::ostream& out, std::span<const AggregateRow> series, double envelope_constant);

struct PlotSeries {
  std::string label;
  std::vector<AggregateRow> rows;
  double envelope_constant = 0.0;
};

/// Static SVG of mean error against N on log–log axes with interval bands and
/// the C·log³N/N envelope of each series.
void write_loglog_svg(std::ostream& out, std::span<const PlotSeries> series, const std::string& title);

}  // namespace driftnn
