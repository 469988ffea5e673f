#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "driftnn/dataset.hpp"

using namespace driftnn;

namespace {

constexpr double kBumpAtOne = -0.34692338355001695;

TrajectorySet hand_set(std::size_t d, GridSpec grid, std::vector<double> states) {
  TrajectorySet t;
  t.dim = d;
  t.grid = grid;
  t.paths = states.size() / (d * (grid.steps + 1));
  t.states = std::move(states);
  return t;
}

}  // namespace

TEST_CASE("constant paths give zero targets") {
  const auto traj = simulate(DriftSpec::zero(2), DiffusionSpec::zero(2), GridSpec(1.0, 5), 3,
                             InitialLaw::constant({0.2, 0.4}), 0);
  for (std::size_t i : {1u, 2u}) {
    const auto s = make_samples(traj, i);
    CHECK(s.size() == 15);
    for (double y : s.y) CHECK(y == 0.0);
  }
}

TEST_CASE("unit-slope path gives unit targets") {
  const GridSpec grid(1.0, 10);
  std::vector<double> states;
  for (std::size_t m = 0; m <= 10; ++m) states.push_back(grid.time(m));
  const auto s = make_samples(hand_set(1, grid, states), 1);
  CHECK(s.size() == 10);
  for (double y : s.y) CHECK(y == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("hand-computed increments") {
  const auto traj = hand_set(2, GridSpec(1.0, 2), {0, 0, 0.5, 1, 1, 3});
  const auto s = make_samples(traj, 2);
  REQUIRE(s.size() == 2);
  CHECK(s.y[0] == 2.0);
  CHECK(s.y[1] == 4.0);
  CHECK(s.in_domain[0] == 1);
  CHECK(s.in_domain[1] == 1);
  const auto first = make_samples(traj, 1);
  CHECK(first.y[0] == 1.0);
  CHECK(first.y[1] == 1.0);
  CHECK(s.sample(1).x == std::vector<double>{0.5, 1.0});
  CHECK(s.path[1] == 0);
  CHECK(s.step[1] == 1);
}

TEST_CASE("bad arguments") {
  TrajectorySet empty;
  empty.dim = 1;
  CHECK_THROWS_AS(make_samples(empty, 1), std::invalid_argument);
  const auto traj = hand_set(2, GridSpec(1.0, 2), {0, 0, 0.5, 1, 1, 3});
  CHECK_THROWS_AS(make_samples(traj, 0), std::invalid_argument);
  CHECK_THROWS_AS(make_samples(traj, 3), std::invalid_argument);
}

TEST_CASE("increments reconstruct the next state") {
  const auto traj = simulate(DriftSpec::paper_example(2), DiffusionSpec::identity(2), GridSpec(1.0, 40), 20,
                             InitialLaw::standard_normal(), 8);
  const auto s = make_samples(traj, 2);
  CHECK(s.size() == 20 * 40);
  for (std::size_t k = 0; k < s.size(); ++k) {
    const double x = traj.at(s.path[k], s.step[k])[1];
    const double next = traj.at(s.path[k], s.step[k] + 1)[1];
    const double tol = 2.0 * std::numeric_limits<double>::epsilon() * std::max({1.0, std::abs(x), std::abs(next)});
    CHECK(std::abs(x + s.dt * s.y[k] - next) <= tol);
  }
}

TEST_CASE("domain flag and masking modes") {
  const auto traj = hand_set(1, GridSpec(1.0, 4), {-0.5, 0.0, 0.5, 1.0, 1.5});
  const auto s = make_samples(traj, 1);
  CHECK(std::vector<int>(s.in_domain.begin(), s.in_domain.end()) == std::vector<int>{0, 1, 1, 1});
  CHECK(apply_mask(s, MaskMode::ClassExact).size() == 4);
  const auto kept = apply_mask(s, MaskMode::DomainOnly);
  CHECK(kept.size() == 3);
  CHECK(kept.paths == 1);
  for (std::size_t k = 0; k < kept.size(); ++k) CHECK(kept.in_domain[k] == 1);
}

TEST_CASE("restricted targets") {
  const ScalarField ou = [](std::span<const double> x) { return -x[0]; };
  CHECK(restrict_target(ou, std::vector<double>{0.5}) == -0.5);
  CHECK(restrict_target(ou, std::vector<double>{1.5}) == 0.0);
  CHECK(restrict_target(ou, std::vector<double>{-0.1}) == 0.0);

  const auto f = drift_target(DriftSpec::paper_example(2), 1);
  CHECK(f(std::vector<double>{0.1, 0.1}) == doctest::Approx(-0.1 + kBumpAtOne).epsilon(1e-14));
  CHECK(f(std::vector<double>{0.1, 1.1}) == 0.0);
}

TEST_CASE("restriction is idempotent") {
  const auto f = drift_target(DriftSpec::paper_example(1), 1);
  const ScalarField twice = [&f](std::span<const double> x) { return restrict_target(f, x); };
  for (double x = -0.5; x <= 1.5; x += 0.01) {
    const std::vector<double> p{x};
    CHECK(restrict_target(twice, p) == restrict_target(f, p));
  }
}

TEST_CASE("splits come from disjoint streams") {
  const auto split = make_split(DriftSpec::paper_example(1), DiffusionSpec::identity(1), GridSpec(1.0, 10),
                                {5, 5, 5}, InitialLaw::standard_normal(), 123, 1);
  CHECK(split.train.paths == 5);
  CHECK_FALSE(split.train.states == split.valid.states);
  CHECK_FALSE(split.train.states == split.test.states);
  CHECK_FALSE(split.valid.states == split.test.states);
  const auto again = make_split(DriftSpec::paper_example(1), DiffusionSpec::identity(1), GridSpec(1.0, 10),
                                {5, 5, 5}, InitialLaw::standard_normal(), 123, 1);
  CHECK(again.train == split.train);
  CHECK(again.test == split.test);
}

TEST_CASE("sample csv layout") {
  const auto traj = hand_set(2, GridSpec(1.0, 2), {0, 0, 0.5, 1, 1, 3});
  std::ostringstream out;
  write_samples_csv(out, make_samples(traj, 1));
  std::istringstream in(out.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "path,step,x_1,x_2,y,in_domain");
  std::getline(in, line);
  CHECK(line.rfind("0,0,", 0) == 0);
}
