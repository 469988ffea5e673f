#include "driftnn/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

#include "driftnn/bounds.hpp"

namespace driftnn {

namespace {

void require_test_set(const TrajectorySet& test) {
  if (test.paths == 0 || test.grid.steps == 0 || test.states.empty()) {
    throw std::invalid_argument("empty test set");
  }
}

double masked_sq_diff(const ScalarField& estimate, const ScalarField& target, std::span<const double> x) {
  if (!in_unit_cube(x)) return 0.0;
  const double diff = estimate(x) - target(x);
  return diff * diff;
}

}  // namespace

RiskEstimate empirical_risk_serial(const ScalarField& estimate, const ScalarField& target,
                                   const TrajectorySet& test) {
  require_test_set(test);
  const std::size_t M = test.grid.steps;
  double sum = 0.0;
  for (std::size_t n = 0; n < test.paths; ++n) {
    for (std::size_t m = 0; m < M; ++m) sum += masked_sq_diff(estimate, target, test.at(n, m));
  }
  return {sum / static_cast<double>(M * test.paths), test.paths, M};
}

RiskEstimate empirical_risk(const ScalarField& estimate, const ScalarField& target,
                            const TrajectorySet& test) {
  require_test_set(test);
  const std::size_t M = test.grid.steps;
  std::vector<double> per_path(test.paths, 0.0);
  const auto count = static_cast<std::int64_t>(test.paths);

#pragma omp parallel for schedule(static)
  for (std::int64_t ni = 0; ni < count; ++ni) {
    const auto n = static_cast<std::size_t>(ni);
    double s = 0.0;
    for (std::size_t m = 0; m < M; ++m) s += masked_sq_diff(estimate, target, test.at(n, m));
    per_path[n] = s;
  }

  double sum = 0.0;
  for (double s : per_path) sum += s;
  return {sum / static_cast<double>(M * test.paths), test.paths, M};
}

RiskEvaluator::RiskEvaluator(const TrajectorySet& test, const ScalarField& target)
    : dim_(test.dim), paths_(test.paths), steps_(test.grid.steps) {
  require_test_set(test);
  for (std::size_t n = 0; n < test.paths; ++n) {
    for (std::size_t m = 0; m < steps_; ++m) {
      auto x = test.at(n, m);
      if (!in_unit_cube(x)) continue;
      points_.insert(points_.end(), x.begin(), x.end());
      target_.push_back(target(x));
    }
  }
}

RiskEstimate RiskEvaluator::operator()(const ScalarField& estimate) const {
  double sum = 0.0;
  for (std::size_t k = 0; k < target_.size(); ++k) {
    const double diff = estimate(std::span<const double>(points_.data() + k * dim_, dim_)) - target_[k];
    sum += diff * diff;
  }
  return {sum / static_cast<double>(steps_ * paths_), paths_, steps_};
}

namespace {

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  constexpr int kMaxIter = 500;
  constexpr double kEps = 1e-16;
  constexpr double kTiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < kTiny) d = kTiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kMaxIter; ++m) {
    const double m2 = 2.0 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < kTiny) d = kTiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < kTiny) c = kTiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kEps) break;
  }
  return h;
}

}  // namespace

double incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0 && b > 0.0)) throw std::invalid_argument("incomplete_beta: a, b must be positive");
  if (!(x >= 0.0 && x <= 1.0)) throw std::invalid_argument("incomplete_beta: x must lie in [0, 1]");
  if (x == 0.0 || x == 1.0) return x;
  const double log_front =
      std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b) + a * std::log(x) + b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) return front * beta_continued_fraction(a, b, x) / a;
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_cdf(double t, double dof) {
  if (!(dof > 0.0)) throw std::invalid_argument("degrees of freedom must be positive");
  if (t == 0.0) return 0.5;
  const double tail = 0.5 * incomplete_beta(0.5 * dof, 0.5, dof / (dof + t * t));
  return t > 0.0 ? 1.0 - tail : tail;
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0)) throw std::invalid_argument("probability must lie in (0, 1)");
  if (p == 0.5) return 0.0;
  if (p < 0.5) return -student_t_quantile(1.0 - p, dof);
  double lo = 0.0;
  double hi = 1.0;
  while (student_t_cdf(hi, dof) < p) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw std::runtime_error("student_t_quantile: bracket failed");
  }
  for (int it = 0; it < 400 && hi - lo > 1e-14 * std::max(1.0, hi); ++it) {
    const double mid = 0.5 * (lo + hi);
    if (student_t_cdf(mid, dof) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

AggregateResult aggregate(std::span<const double> errors) {
  const std::size_t J = errors.size();
  if (J < 2) throw std::invalid_argument("aggregate needs at least two repetitions");
  AggregateResult r;
  r.reps = J;
  r.errors.assign(errors.begin(), errors.end());
  double sum = 0.0;
  for (double e : errors) sum += e;
  r.mean = sum / static_cast<double>(J);
  double ss = 0.0;
  for (double e : errors) ss += (e - r.mean) * (e - r.mean);
  const double sd = std::sqrt(ss / static_cast<double>(J - 1));
  r.std_error = sd / std::sqrt(static_cast<double>(J));
  r.quantile = student_t_quantile(0.975, static_cast<double>(J - 1));
  r.half_width = r.quantile * r.std_error;
  r.lower = r.mean - r.half_width;
  r.upper = r.mean + r.half_width;
  return r;
}

RateFit fit_rate(std::span<const RatePoint> points) {
  if (points.size() < 2) throw std::invalid_argument("fit_rate needs at least two points");
  for (const auto& p : points) {
    if (!(p.error > 0.0)) throw std::invalid_argument("fit_rate: errors must be positive");
    if (!(p.n >= 2.0)) throw std::invalid_argument("fit_rate: N must be at least 2");
  }
  const bool distinct = std::any_of(points.begin(), points.end(),
                                    [&](const RatePoint& p) { return p.n != points.front().n; });
  if (!distinct) throw std::invalid_argument("fit_rate needs at least two distinct N");

  const double k = static_cast<double>(points.size());
  double sx = 0.0, sy = 0.0;
  for (const auto& p : points) {
    sx += std::log(p.n);
    sy += std::log(p.error);
  }
  const double mx = sx / k;
  const double my = sy / k;
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (const auto& p : points) {
    const double dx = std::log(p.n) - mx;
    const double dy = std::log(p.error) - my;
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  RateFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  if (syy == 0.0) {
    fit.r2 = 1.0;
  } else {
    double sse = 0.0;
    for (const auto& p : points) {
      const double r = std::log(p.error) - (fit.intercept + fit.slope * std::log(p.n));
      sse += r * r;
    }
    fit.r2 = std::clamp(1.0 - sse / syy, 0.0, 1.0);
  }
  for (const auto& p : points) {
    fit.envelope_constant = std::max(fit.envelope_constant, p.error / bounds::envelope(p.n, 1.0));
  }
  return fit;
}

void write_aggregates_csv(std::ostream& out, std::span<const AggregateRow> rows) {
  out << "method,N,d,mean,lower,upper,J\n";
  out.precision(17);
  for (const auto& r : rows) {
    out << r.method << ',' << r.n << ',' << r.d << ',' << r.result.mean << ',' << r.result.lower << ','
        << r.result.upper << ',' << r.result.reps << '\n';
  }
}

void write_plot_csv(std::ostream& out, std::span<const AggregateRow> series, double envelope_constant) {
  out << "N,mean,lower,upper,envelope\n";
  out.precision(17);
  for (const auto& r : series) {
    out << r.n << ',' << r.result.mean << ',' << r.result.lower << ',' << r.result.upper << ','
        << bounds::envelope(static_cast<double>(r.n), envelope_constant) << '\n';
  }
}

void write_loglog_svg(std::ostream& out, std::span<const PlotSeries> series, const std::string& title) {
  constexpr double W = 640, H = 440, left = 70, right = 20, top = 40, bottom = 50;
  double xmin = std::numeric_limits<double>::max(), xmax = 0.0;
  double ymin = std::numeric_limits<double>::max(), ymax = 0.0;
  for (const auto& s : series) {
    for (const auto& r : s.rows) {
      const double n = static_cast<double>(r.n);
      xmin = std::min(xmin, n);
      xmax = std::max(xmax, n);
      const double lo = r.result.lower > 0.0 ? r.result.lower : r.result.mean;
      ymin = std::min(ymin, lo);
      ymax = std::max({ymax, r.result.upper, r.result.mean});
      if (s.envelope_constant > 0.0 && n >= 2.0) {
        ymax = std::max(ymax, bounds::envelope(n, s.envelope_constant));
      }
    }
  }
  if (!(xmax > xmin) || !(ymin > 0.0) || !(ymax > ymin)) {
    xmin = 1.0, xmax = 10.0, ymin = 0.1, ymax = 1.0;
  }
  const double lx0 = std::log10(xmin), lx1 = std::log10(xmax);
  const double ly0 = std::log10(ymin) - 0.1, ly1 = std::log10(ymax) + 0.1;
  auto px = [&](double x) { return left + (std::log10(x) - lx0) / (lx1 - lx0) * (W - left - right); };
  auto py = [&](double y) {
    return top + (ly1 - std::log10(std::max(y, 1e-300))) / (ly1 - ly0) * (H - top - bottom);
  };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H << "\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" << title
      << "</text>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << H - bottom << "\" x2=\"" << W - right << "\" y2=\""
      << H - bottom << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << H - bottom
      << "\" stroke=\"black\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">N (log scale)</text>\n";
  out << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\">test error (log scale)</text>\n";

  for (std::size_t si = 0; si < series.size(); ++si) {
    const auto& s = series[si];
    const char* color = colors[si % 5];
    if (s.rows.empty()) continue;
    out << "<polygon fill=\"" << color << "\" fill-opacity=\"0.15\" stroke=\"none\" points=\"";
    for (const auto& r : s.rows) out << px(double(r.n)) << ',' << py(std::max(r.result.upper, 1e-300)) << ' ';
    for (auto it = s.rows.rbegin(); it != s.rows.rend(); ++it) {
      const double lo = it->result.lower > 0.0 ? it->result.lower : it->result.mean;
      out << px(double(it->n)) << ',' << py(lo) << ' ';
    }
    out << "\"/>\n<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    for (const auto& r : s.rows) out << px(double(r.n)) << ',' << py(r.result.mean) << ' ';
    out << "\"/>\n";
    if (s.envelope_constant > 0.0) {
      out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-dasharray=\"6,4\" points=\"";
      for (const auto& r : s.rows) {
        out << px(double(r.n)) << ',' << py(bounds::envelope(double(r.n), s.envelope_constant)) << ' ';
      }
      out << "\"/>\n";
    }
    out << "<text x=\"" << left + 10 << "\" y=\"" << top + 16 + 16 * si << "\" fill=\"" << color
        << "\">" << s.label << "</text>\n";
  }
  out << "</svg>\n";
}

}  // namespace driftnn
