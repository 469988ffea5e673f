#include <doctest.h>

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <random>
#include <sstream>

#include "driftnn/bounds.hpp"
#include "driftnn/metrics.hpp"

using namespace driftnn;

namespace {

// Student t quantiles from an arbitrary-precision inverse CDF computed
// outside the build.
constexpr double kT975Dof49 = 2.0095752371292397;
constexpr double kT975Dof1 = 12.706204736432095;
constexpr double kT975Dof4 = 2.7764451051977987;

// CDF by composite Simpson quadrature of the density; independent of the
// incomplete beta route used by the library.
double t_cdf_quadrature(double t, double nu) {
  const double logc = std::lgamma((nu + 1) / 2) - std::lgamma(nu / 2) - 0.5 * std::log(nu * M_PI);
  auto pdf = [&](double x) { return std::exp(logc - (nu + 1) / 2 * std::log1p(x * x / nu)); };
  const int n = 20000;
  const double h = std::abs(t) / n;
  double s = pdf(0) + pdf(std::abs(t));
  for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * pdf(i * h);
  const double half = s * h / 3.0;
  return t >= 0 ? 0.5 + half : 0.5 - half;
}

TrajectorySet hand_paths() {
  // Two paths, M = 2, d = 1. The last state of each path is never scored.
  TrajectorySet t;
  t.paths = 2;
  t.dim = 1;
  t.grid = GridSpec(1.0, 2);
  t.states = {0.2, 1.5, 9.0, 0.6, -0.3, 9.0};
  return t;
}

}  // namespace

TEST_CASE("risk hand examples") {
  const auto test = hand_paths();
  const ScalarField zero = [](std::span<const double>) { return 0.0; };
  const ScalarField ident = [](std::span<const double> x) { return x[0]; };
  const ScalarField one = [](std::span<const double>) { return 1.0; };

  CHECK(empirical_risk(ident, ident, test).value == 0.0);
  // (0.2² + 0 + 0.6² + 0) / 4
  CHECK(empirical_risk(ident, zero, test).value == doctest::Approx(0.1).epsilon(1e-15));
  const auto r = empirical_risk(zero, one, test);
  CHECK(r.value == 0.5);
  CHECK(r.test_paths == 2);
  CHECK(r.steps == 2);

  TrajectorySet inside = test;
  inside.states = {0.2, 0.5, 0.0, 0.6, 0.3, 0.0};
  CHECK(empirical_risk(zero, one, inside).value == 1.0);
}

TEST_CASE("risk is permutation invariant and thread independent") {
  const auto test = simulate(DriftSpec::paper_example(1), DiffusionSpec::identity(1), GridSpec(1.0, 50), 300,
                             InitialLaw::standard_normal(), 3);
  const ScalarField target = [](std::span<const double> x) { return std::sin(5 * x[0]); };
  const ScalarField est = [](std::span<const double> x) { return x[0] * x[0]; };
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const double one = empirical_risk(est, target, test).value;
  omp_set_num_threads(4);
  const double four = empirical_risk(est, target, test).value;
  omp_set_num_threads(saved);
  CHECK(one == four);
  CHECK(empirical_risk_serial(est, target, test).value == doctest::Approx(one).epsilon(1e-13));
  CHECK(RiskEvaluator(test, target)(est).value == doctest::Approx(one).epsilon(1e-13));

  // Reverse the order of paths and of the scored steps inside each path.
  TrajectorySet shuffled = test;
  const std::size_t M = test.steps();
  for (std::size_t n = 0; n < test.paths; ++n) {
    for (std::size_t m = 0; m < M; ++m) {
      shuffled.at(test.paths - 1 - n, M - 1 - m)[0] = test.at(n, m)[0];
    }
  }
  CHECK(empirical_risk(est, target, shuffled).value == doctest::Approx(one).epsilon(1e-13));
}

TEST_CASE("student t cdf and quantiles") {
  for (double nu : {1.0, 2.0, 4.0, 10.0, 49.0}) {
    for (double t : {-3.0, -0.7, 0.0, 0.4, 1.5, 2.5}) {
      CHECK(std::abs(student_t_cdf(t, nu) - t_cdf_quadrature(t, nu)) < 1e-9);
    }
  }
  CHECK(std::abs(student_t_quantile(0.975, 49) - kT975Dof49) < 1e-8);
  CHECK(std::abs(student_t_quantile(0.975, 1) - kT975Dof1) < 1e-8);
  CHECK(std::abs(student_t_quantile(0.975, 4) - kT975Dof4) < 1e-8);
  CHECK(student_t_quantile(0.5, 7) == doctest::Approx(0.0));
  CHECK(student_t_quantile(0.025, 4) == doctest::Approx(-kT975Dof4).epsilon(1e-9));
  CHECK(incomplete_beta(2, 3, 0.0) == 0.0);
  CHECK(incomplete_beta(2, 3, 1.0) == 1.0);
  // I_x(1, 1) = x and I_x(a, 1) = x^a.
  CHECK(incomplete_beta(1, 1, 0.3) == doctest::Approx(0.3).epsilon(1e-13));
  CHECK(incomplete_beta(2.5, 1, 0.6) == doctest::Approx(std::pow(0.6, 2.5)).epsilon(1e-12));
}

TEST_CASE("aggregate examples") {
  const std::vector<double> same(7, 0.3);
  const auto flat = aggregate(same);
  CHECK(flat.mean == doctest::Approx(0.3));
  CHECK(flat.half_width == 0.0);
  CHECK(flat.lower == flat.mean);

  const auto two = aggregate(std::vector<double>{0.0, 2.0});
  CHECK(two.mean == 1.0);
  CHECK(two.std_error == doctest::Approx(1.0));
  CHECK(std::abs(two.half_width - kT975Dof1) < 1e-6);
  CHECK(two.lower <= two.mean);
  CHECK(two.mean <= two.upper);

  std::vector<double> fifty(50);
  std::mt19937_64 rng(1);
  std::exponential_distribution<double> e;
  for (double& v : fifty) v = e(rng);
  const auto a = aggregate(fifty);
  CHECK(std::abs(a.quantile - kT975Dof49) < 1e-6);
  CHECK(a.reps == 50);
  CHECK(a.upper - a.mean == doctest::Approx(a.half_width));

  CHECK_THROWS_AS(aggregate(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("duplicated data halves the standard error") {
  std::vector<double> base(50);
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g(1.0, 0.2);
  for (double& v : base) v = g(rng);
  std::vector<double> dup;
  for (int r = 0; r < 4; ++r) dup.insert(dup.end(), base.begin(), base.end());
  const auto a = aggregate(base), b = aggregate(dup);
  CHECK(b.mean == doctest::Approx(a.mean).epsilon(1e-14));
  CHECK(std::abs(b.std_error / a.std_error - 0.5) < 0.05 * 0.5);
  CHECK(std::abs(b.half_width / a.half_width - 0.5) < 0.05 * 0.5);
}

TEST_CASE("rate fits") {
  const std::vector<RatePoint> exact{{100, 1e-2}, {1000, 1e-3}};
  const auto f = fit_rate(exact);
  CHECK(f.slope == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(f.r2 == doctest::Approx(1.0).epsilon(1e-12));

  const std::vector<RatePoint> flat{{100, 0.2}, {500, 0.2}, {2000, 0.2}};
  CHECK(std::abs(fit_rate(flat).slope) < 1e-12);

  std::vector<RatePoint> env;
  for (double n : {100.0, 500.0, 2000.0}) env.push_back({n, bounds::envelope(n)});
  const auto fe = fit_rate(env);
  CHECK(std::abs(fe.envelope_constant - 1.0) < 1e-10);
  CHECK(fe.slope > -1.0);
  CHECK(fe.slope < -0.4);
  CHECK(fe.r2 >= 0.0);
  CHECK(fe.r2 <= 1.0);

  std::vector<RatePoint> scaled = env;
  for (auto& p : scaled) p.error *= 7.0;
  const auto fs = fit_rate(scaled);
  CHECK(fs.slope == doctest::Approx(fe.slope).epsilon(1e-12));
  CHECK(fs.intercept == doctest::Approx(fe.intercept + std::log(7.0)).epsilon(1e-12));
  for (const auto& p : scaled) CHECK(p.error <= fs.envelope_constant * bounds::envelope(p.n) * (1 + 1e-12));

  CHECK_THROWS(fit_rate(std::vector<RatePoint>{{100, 0.1}, {200, 0.0}}));
  CHECK_THROWS(fit_rate(std::vector<RatePoint>{{100, 0.1}, {100, 0.2}}));
}

TEST_CASE("csv and svg output") {
  std::vector<AggregateRow> rows;
  for (std::size_t n : {100u, 500u}) {
    rows.push_back({"nn", n, 1, aggregate(std::vector<double>{0.1 / n, 0.2 / n, 0.15 / n})});
  }
  std::ostringstream agg;
  write_aggregates_csv(agg, rows);
  const std::string text = agg.str();
  CHECK(text.rfind("method,N,d,mean,lower,upper,J\n", 0) == 0);
  CHECK(std::count(text.begin(), text.end(), '\n') == 3);

  std::ostringstream plot;
  write_plot_csv(plot, rows, 2.0);
  std::istringstream in(plot.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "N,mean,lower,upper,envelope");
  std::getline(in, line);
  const double env = std::stod(line.substr(line.rfind(',') + 1));
  CHECK(env == doctest::Approx(bounds::envelope(100, 2.0)).epsilon(1e-12));

  std::ostringstream svg;
  const std::vector<PlotSeries> series{{"nn", rows, 2.0}};
  write_loglog_svg(svg, series, "d = 1");
  CHECK(svg.str().find("<svg") != std::string::npos);
  CHECK(svg.str().find("</svg>") != std::string::npos);
}
