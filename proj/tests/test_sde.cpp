#include <doctest.h>

#include <cmath>
#include <sstream>
#include <vector>

#include "driftnn/sde.hpp"

using namespace driftnn;

namespace {

// 2·e⁻¹ − 8·e⁻², evaluated in high precision outside the build.
constexpr double kBumpAtOne = -0.34692338355001695;

double sample_variance(const std::vector<double>& v) {
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return ss / static_cast<double>(v.size() - 1);
}

}  // namespace

TEST_CASE("bump and example drift values") {
  CHECK(bump(0.0) == 0.0);
  CHECK(bump(1.0) == doctest::Approx(kBumpAtOne).epsilon(1e-15));

  const auto b1 = DriftSpec::paper_example(1);
  CHECK(evaluate_drift(b1, std::vector<double>{0.0})[0] == 0.0);
  CHECK(evaluate_drift(b1, std::vector<double>{0.2})[0] == doctest::Approx(-0.2 + kBumpAtOne).epsilon(1e-14));

  const auto b3 = DriftSpec::paper_example(3);
  const std::vector<double> x{0.1, 0.05, 0.05};
  const auto v = evaluate_drift(b3, x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(v[i] == doctest::Approx(-x[i] + kBumpAtOne).epsilon(1e-14));
}

TEST_CASE("ou drift and argument checks") {
  const auto ou = DriftSpec::ornstein_uhlenbeck(3);
  const auto v = evaluate_drift(ou, std::vector<double>{1.0, 2.0, 3.0});
  CHECK(v == std::vector<double>{-1.0, -2.0, -3.0});
  CHECK_THROWS_AS(evaluate_drift(ou, std::vector<double>{1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(evaluate_drift(ou, std::vector<double>{1.0, NAN, 0.0}), std::invalid_argument);
  CHECK_THROWS_AS(DriftSpec::paper_example(1, 0.0), std::invalid_argument);
}

TEST_CASE("diffusion evaluation") {
  const std::vector<double> x{0.3, -0.2};
  CHECK(DiffusionSpec::identity(2).evaluate(x) == std::vector<double>{1, 0, 0, 1});
  const auto c = DiffusionSpec::constant(2, {1, 2, 3, 4});
  std::vector<double> out(2), scratch(4);
  c.apply(x, std::vector<double>{1.0, 1.0}, out, scratch);
  CHECK(out == std::vector<double>{3.0, 7.0});
  CHECK_THROWS_AS(DiffusionSpec::constant(2, {1, 2, 3}), std::invalid_argument);
}

TEST_CASE("grid endpoint is exact") {
  for (std::size_t M : {1u, 3u, 7u, 100u, 999u}) {
    const GridSpec g(1.3, M);
    CHECK(g.time(M) == 1.3);
    CHECK(g.time(0) == 0.0);
  }
  CHECK_THROWS(GridSpec(0.0, 10));
  CHECK_THROWS(GridSpec(1.0, 0));
}

TEST_CASE("sigma zero reduces to explicit Euler") {
  const GridSpec grid(1.0, 100);
  const auto traj = simulate(DriftSpec::ornstein_uhlenbeck(1), DiffusionSpec::zero(1), grid, 3,
                             InitialLaw::constant({1.0}), 11);
  double expected = 1.0;
  for (std::size_t m = 0; m <= 100; ++m) {
    for (std::size_t n = 0; n < 3; ++n) CHECK(traj.at(n, m)[0] == expected);
    expected = expected + (-expected) * grid.dt();
  }
  CHECK(traj.at(0, 100)[0] == doctest::Approx(std::pow(0.99, 100)).epsilon(1e-12));
  CHECK(std::abs(traj.at(0, 100)[0] - std::exp(-1.0)) < 0.01);
}

TEST_CASE("zero drift and zero diffusion keep the initial state") {
  const auto traj = simulate(DriftSpec::zero(2), DiffusionSpec::zero(2), GridSpec(1.0, 10), 2,
                             InitialLaw::constant({0.25, -3.0}), 5);
  for (std::size_t n = 0; n < 2; ++n) {
    for (std::size_t m = 0; m <= 10; ++m) {
      CHECK(traj.at(n, m)[0] == 0.25);
      CHECK(traj.at(n, m)[1] == -3.0);
    }
  }
}

TEST_CASE("simulation is deterministic and matches the serial reference") {
  const auto drift = DriftSpec::paper_example(2);
  const auto diff = DiffusionSpec::identity(2);
  const GridSpec grid(1.0, 50);
  const auto a = simulate(drift, diff, grid, 37, InitialLaw::standard_normal(), 42);
  const auto b = simulate(drift, diff, grid, 37, InitialLaw::standard_normal(), 42);
  const auto s = simulate_serial(drift, diff, grid, 37, InitialLaw::standard_normal(), 42);
  CHECK(a == b);
  CHECK(a == s);
  const auto other = simulate(drift, diff, grid, 37, InitialLaw::standard_normal(), 43);
  CHECK_FALSE(a == other);
}

TEST_CASE("path n does not depend on the number of paths") {
  const auto drift = DriftSpec::paper_example(1);
  const auto diff = DiffusionSpec::identity(1);
  const GridSpec grid(1.0, 20);
  const auto small = simulate(drift, diff, grid, 3, InitialLaw::standard_normal(), 9);
  const auto large = simulate(drift, diff, grid, 10, InitialLaw::standard_normal(), 9);
  for (std::size_t n = 0; n < 3; ++n) {
    for (std::size_t m = 0; m <= 20; ++m) CHECK(small.at(n, m)[0] == large.at(n, m)[0]);
  }
}

TEST_CASE("increment variance scales with c squared dt") {
  const double c = 1.7;
  const GridSpec grid(1.0, 100);
  const auto traj = simulate(DriftSpec::zero(2), DiffusionSpec::scaled_identity(2, c), grid, 1000,
                             InitialLaw::constant({0.0, 0.0}), 3);
  for (std::size_t k = 0; k < 2; ++k) {
    std::vector<double> inc;
    for (std::size_t n = 0; n < traj.paths; ++n) {
      for (std::size_t m = 0; m < 100; ++m) inc.push_back(traj.at(n, m + 1)[k] - traj.at(n, m)[k]);
    }
    const double target = c * c * grid.dt();
    CHECK(std::abs(sample_variance(inc) - target) / target < 0.1);
  }
}

TEST_CASE("increments of different paths are uncorrelated") {
  const auto traj = simulate(DriftSpec::zero(1), DiffusionSpec::identity(1), GridSpec(1.0, 100), 2000,
                             InitialLaw::constant({0.0}), 17);
  // Pair path 2j with path 2j+1 step by step.
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t n = 0; n + 1 < traj.paths; n += 2) {
    for (std::size_t m = 0; m < 100; ++m) {
      const double a = traj.at(n, m + 1)[0] - traj.at(n, m)[0];
      const double b = traj.at(n + 1, m + 1)[0] - traj.at(n + 1, m)[0];
      sxy += a * b;
      sxx += a * a;
      syy += b * b;
    }
  }
  CHECK(std::abs(sxy / std::sqrt(sxx * syy)) < 0.05);
}

TEST_CASE("divergence names the path and step") {
  const auto blowup = DriftSpec::custom(1, "blowup", [](std::span<const double> x, std::span<double> out) {
    out[0] = x[0] * x[0] * 1e200;
  });
  try {
    simulate(blowup, DiffusionSpec::zero(1), GridSpec(1.0, 10), 2, InitialLaw::constant({1.0}), 0);
    FAIL("expected divergence");
  } catch (const SimulationDiverged& e) {
    CHECK(e.path() == 0);
    CHECK(e.step() >= 1);
    CHECK(e.step() <= 10);
  }
}

TEST_CASE("subsample keeps every k-th observation") {
  const auto traj = simulate(DriftSpec::paper_example(1), DiffusionSpec::identity(1), GridSpec(1.0, 12), 4,
                             InitialLaw::standard_normal(), 1);
  const auto sub = subsample(traj, 3);
  CHECK(sub.steps() == 4);
  CHECK(sub.grid.dt() == doctest::Approx(0.25));
  for (std::size_t n = 0; n < 4; ++n) {
    for (std::size_t m = 0; m <= 4; ++m) CHECK(sub.at(n, m)[0] == traj.at(n, 3 * m)[0]);
  }
  CHECK_THROWS(subsample(traj, 5));
}

TEST_CASE("trajectory container round trip") {
  const auto traj = simulate(DriftSpec::paper_example(2), DiffusionSpec::identity(2), GridSpec(1.0, 8), 5,
                             InitialLaw::standard_normal(), 77);
  std::stringstream buf;
  write_trajectories(buf, traj);
  CHECK(buf.str().size() == 8 + 4 + 3 * 8 + 8 + 8 + 4 + 4 + 8 + 5 * 9 * 2 * 8);
  const auto back = read_trajectories(buf);
  CHECK(back == traj);

  std::stringstream bad("NOTATRAJ");
  CHECK_THROWS(read_trajectories(bad));
}

TEST_CASE("trajectory csv layout") {
  const auto traj = simulate(DriftSpec::zero(2), DiffusionSpec::zero(2), GridSpec(1.0, 2), 1,
                             InitialLaw::constant({0.5, 1.5}), 0);
  std::ostringstream out;
  write_trajectories_csv(out, traj);
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "path,step,t,x_1,x_2");
  std::size_t rows = 0;
  while (std::getline(in, line)) ++rows;
  CHECK(rows == 3);
}
