#include "driftnn/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

#include <json.hpp>

#include "driftnn/binary_io.hpp"

namespace driftnn {

namespace {
constexpr std::string_view kMagic{"DNNCKPT\0", 8};
constexpr std::uint32_t kFlagMask = 1u;
constexpr std::uint32_t kFlagOutputShift = 2u;
constexpr std::uint32_t kFlagAdam = 4u;
}  // namespace

void write_checkpoint(std::ostream& out, const SparseNetwork& net, const AdamState* adam) {
  std::uint32_t flags = 0;
  if (net.masking()) flags |= kFlagMask;
  if (net.arch().output_shift) flags |= kFlagOutputShift;
  if (adam) flags |= kFlagAdam;

  io::write_magic(out, kMagic);
  io::write_u32(out, kCheckpointVersion);
  io::write_u32(out, flags);
  io::write_u64(out, net.arch().widths.size());
  for (std::size_t w : net.arch().widths) io::write_u64(out, w);
  io::write_u64(out, net.budget());
  io::write_f64(out, net.clamp());
  io::write_f64s(out, net.params());
  if (adam) {
    io::write_f64(out, adam->config.learning_rate);
    io::write_f64(out, adam->config.beta1);
    io::write_f64(out, adam->config.beta2);
    io::write_f64(out, adam->config.epsilon);
    io::write_u64(out, adam->step);
    io::write_f64s(out, adam->first_moment);
    io::write_f64s(out, adam->second_moment);
  }
}

Checkpoint read_checkpoint(std::istream& in) {
  io::expect_magic(in, kMagic);
  if (auto v = io::read_u32(in); v != kCheckpointVersion) {
    throw std::runtime_error("unsupported checkpoint version " + std::to_string(v));
  }
  const std::uint32_t flags = io::read_u32(in);
  const std::size_t n_widths = io::read_u64(in);
  if (n_widths < 3 || n_widths > 1024) throw std::runtime_error("checkpoint: implausible layer count");
  std::vector<std::size_t> widths(n_widths);
  for (auto& w : widths) w = io::read_u64(in);
  const std::size_t s = io::read_u64(in);
  const double F = io::read_f64(in);

  Checkpoint ck{SparseNetwork(Architecture(widths, (flags & kFlagOutputShift) != 0), s, F,
                              (flags & kFlagMask) != 0),
                std::nullopt};
  io::read_f64s(in, ck.net.params());
  if (flags & kFlagAdam) {
    AdamConfig cfg;
    cfg.learning_rate = io::read_f64(in);
    cfg.beta1 = io::read_f64(in);
    cfg.beta2 = io::read_f64(in);
    cfg.epsilon = io::read_f64(in);
    AdamState state(ck.net.size(), cfg);
    state.step = io::read_u64(in);
    io::read_f64s(in, state.first_moment);
    io::read_f64s(in, state.second_moment);
    ck.adam = std::move(state);
  }
  return ck;
}

void write_checkpoint(const std::string& path, const SparseNetwork& net, const AdamState* adam) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  write_checkpoint(out, net, adam);
}

Checkpoint read_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path);
  return read_checkpoint(in);
}

void write_checkpoint_meta(const std::string& path, const CheckpointMeta& meta) {
  nlohmann::json j = {{"arch", meta.arch},
                      {"seed", meta.seed},
                      {"epoch", meta.epoch},
                      {"validation_error", meta.validation_error},
                      {"s", meta.budget},
                      {"F", meta.clamp},
                      {"format_version", kCheckpointVersion}};
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open " + path + " for writing");
  out << j.dump(2) << '\n';
}

CheckpointMeta read_checkpoint_meta(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  const auto j = nlohmann::json::parse(in);
  CheckpointMeta meta;
  meta.arch = j.at("arch").get<std::string>();
  meta.seed = j.at("seed").get<std::uint64_t>();
  meta.epoch = j.at("epoch").get<std::size_t>();
  meta.validation_error = j.at("validation_error").get<double>();
  meta.budget = j.at("s").get<std::size_t>();
  meta.clamp = j.at("F").get<double>();
  return meta;
}

}  // namespace driftnn
