#include <doctest.h>

#include <filesystem>
#include <random>
#include <sstream>

#include "driftnn/checkpoint.hpp"

using namespace driftnn;

namespace {

SparseNetwork sample_net(bool output_shift) {
  const auto arch = Architecture::from_hidden(3, {5, 4}, output_shift);
  SparseNetwork net(arch, sparsity_budget(arch, 0.5), 7.5, false);
  initialize_uniform(net, 3);
  return net;
}

}  // namespace

TEST_CASE("checkpoint round trip with and without adam state") {
  for (bool shift : {true, false}) {
    const auto net = sample_net(shift);
    std::stringstream plain;
    write_checkpoint(plain, net);
    const auto back = read_checkpoint(plain);
    CHECK(back.net == net);
    CHECK_FALSE(back.adam.has_value());

    AdamState adam(net.size(), AdamConfig{0.01, 0.8, 0.99, 1e-7});
    std::mt19937_64 rng(1);
    std::normal_distribution<double> g;
    for (std::size_t k = 0; k < net.size(); ++k) {
      adam.first_moment[k] = g(rng);
      adam.second_moment[k] = std::abs(g(rng));
    }
    adam.step = 17;
    std::stringstream full;
    write_checkpoint(full, net, &adam);
    const auto both = read_checkpoint(full);
    CHECK(both.net == net);
    REQUIRE(both.adam.has_value());
    CHECK(*both.adam == adam);
  }
}

TEST_CASE("checkpoint layout and corruption") {
  const auto net = sample_net(true);
  std::stringstream buf;
  write_checkpoint(buf, net);
  const std::string bytes = buf.str();
  CHECK(bytes.substr(0, 8) == std::string("DNNCKPT\0", 8));
  // magic, version, flags, width count, 4 widths, s, F, params
  CHECK(bytes.size() == 8 + 4 + 4 + 8 + 4 * 8 + 8 + 8 + net.size() * 8);

  std::stringstream bad_magic("XXXXXXXX" + bytes.substr(8));
  CHECK_THROWS(read_checkpoint(bad_magic));
  std::stringstream truncated(bytes.substr(0, bytes.size() - 5));
  CHECK_THROWS(read_checkpoint(truncated));
  std::string future = bytes;
  future[8] = 9;
  std::stringstream wrong_version(future);
  CHECK_THROWS(read_checkpoint(wrong_version));
}

TEST_CASE("checkpoint files and metadata sidecar") {
  const auto dir = std::filesystem::temp_directory_path() / "driftnn_ckpt_test";
  std::filesystem::create_directories(dir);
  const auto net = sample_net(true);
  write_checkpoint((dir / "m.ckpt").string(), net);
  CHECK(read_checkpoint((dir / "m.ckpt").string()).net == net);

  const CheckpointMeta meta{net.arch().to_string(), 42, 13, 0.125, net.budget(), net.clamp()};
  write_checkpoint_meta((dir / "m.json").string(), meta);
  const auto back = read_checkpoint_meta((dir / "m.json").string());
  CHECK(back.arch == "3-5-4-1");
  CHECK(back.seed == 42);
  CHECK(back.epoch == 13);
  CHECK(back.validation_error == 0.125);
  CHECK(back.budget == net.budget());
  CHECK(back.clamp == 7.5);
  CHECK_THROWS(read_checkpoint((dir / "missing.ckpt").string()));
  std::filesystem::remove_all(dir);
}
