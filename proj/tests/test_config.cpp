#include <doctest.h>

#include "driftnn/config.hpp"
#include "driftnn/experiment.hpp"

using namespace driftnn;

TEST_CASE("key value parsing") {
  const auto kv = KeyValueConfig::parse(
      "# comment\n"
      "grid.M = 50   # trailing comment\n"
      "sweep.N = 100, 500 ,2000\n"
      "nn.arch = 16-16, 16-32-16\n"
      "nn.s_ratio = 0.25,0.5\n"
      "svg = yes\n"
      "memory_cap_bytes = 2e9\n"
      "\n"
      "out = results/run 1\n");
  CHECK(kv.get_uint("grid.M", 0) == 50);
  CHECK(kv.get_sizes("sweep.N", {}) == std::vector<std::size_t>{100, 500, 2000});
  CHECK(kv.get_size_lists("nn.arch", {}) == std::vector<std::vector<std::size_t>>{{16, 16}, {16, 32, 16}});
  CHECK(kv.get_doubles("nn.s_ratio", {}) == std::vector<double>{0.25, 0.5});
  CHECK(kv.get_bool("svg", false));
  CHECK(kv.get_uint("memory_cap_bytes", 0) == 2000000000ULL);
  CHECK(kv.get_string("out", "") == "results/run 1");
  CHECK(kv.get_double("missing", 1.5) == 1.5);
  CHECK(kv.unknown_keys({"grid.M", "sweep.N", "nn.arch", "nn.s_ratio", "svg", "memory_cap_bytes"}) ==
        std::vector<std::string>{"out"});
}

TEST_CASE("malformed values are config errors") {
  CHECK_THROWS_AS(KeyValueConfig::parse("no equals sign"), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::parse("= 3"), ConfigError);
  const auto kv = KeyValueConfig::parse("a = x1\nb = -3\nc = maybe\nd = 2.5");
  CHECK_THROWS_AS(kv.get_double("a", 0), ConfigError);
  CHECK_THROWS_AS(kv.get_uint("b", 0), ConfigError);
  CHECK_THROWS_AS(kv.get_bool("c", false), ConfigError);
  CHECK_THROWS_AS(kv.get_uint("d", 0), ConfigError);
  CHECK_THROWS_AS(KeyValueConfig::load("/nonexistent/driftnn.cfg"), ConfigError);
}

TEST_CASE("experiment profiles") {
  const auto desk = ExperimentConfig::desk();
  CHECK(desk.reps == 5);
  CHECK(desk.n_list == std::vector<std::size_t>{100, 500, 2000});
  CHECK(desk.d_list == std::vector<std::size_t>{1, 2});
  CHECK_NOTHROW(desk.validate());

  const auto paper = ExperimentConfig::paper();
  CHECK(paper.reps == 50);
  CHECK(paper.n_list == std::vector<std::size_t>{100, 200, 500, 1000, 2000, 5000});
  CHECK(paper.d_list == std::vector<std::size_t>{1, 2, 10, 50});
  CHECK(paper.hidden.size() == 3);
  CHECK(paper.s_ratios == std::vector<double>{0.25, 0.5, 0.75});
  CHECK(paper.learning_rate == 1e-3);
  CHECK(paper.batch_size == 256);
  CHECK(paper.max_epochs == 200);
  CHECK(paper.patience == 20);
  CHECK(paper.test_paths == 1000);
  CHECK(paper.valid_paths == 1000);
  CHECK(paper.horizon == 1.0);
  CHECK(paper.steps == 100);
  CHECK(paper.memory_cap_bytes == 2.0 * 1024 * 1024 * 1024);
}

TEST_CASE("experiment config from keys") {
  const auto c = ExperimentConfig::from(KeyValueConfig::parse(
      "profile = paper\nsweep.N = 100,200\nsweep.d = 1\nsweep.reps = 3\nmask_mode = domain_only\n"
      "tuning_metric = loss\ndrift.kind = ou\nnn.arch = 8-8\nworkers = 4\n"));
  CHECK(c.profile == "paper");
  CHECK(c.n_list == std::vector<std::size_t>{100, 200});
  CHECK(c.reps == 3);
  CHECK(c.mask_mode == MaskMode::DomainOnly);
  CHECK(c.tuning == TuningMetric::ValidationLoss);
  CHECK(c.drift(1).kind() == DriftKind::OrnsteinUhlenbeck);
  CHECK(c.hidden == std::vector<std::vector<std::size_t>>{{8, 8}});
  CHECK(c.workers == 4);
  CHECK(c.s_ratios.size() == 3);

  auto bad = [](const char* text) { return ExperimentConfig::from(KeyValueConfig::parse(text)); };
  CHECK_THROWS_AS(bad("sweep.NN = 100"), ConfigError);
  CHECK_THROWS_AS(bad("profile = huge"), ConfigError);
  CHECK_THROWS_AS(bad("sweep.reps = 1"), ConfigError);
  CHECK_THROWS_AS(bad("mask_mode = everything"), ConfigError);
  CHECK_THROWS_AS(bad("sweep.methods = nn, gp"), ConfigError);
  CHECK_THROWS_AS(bad("nn.patience = 300"), ConfigError);
  CHECK_THROWS_AS(bad("component = 3"), ConfigError);
  CHECK_THROWS_AS(bad("nn.s_ratio = 1.5"), ConfigError);
  CHECK_THROWS_AS(bad("sweep.N = 0"), ConfigError);
}
