#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>

#include "driftnn/network.hpp"

namespace driftnn {

// Binary layout, little-endian:
//   "DNNCKPT\0" | u32 version | u32 flags | u64 width count | u64 widths... |
//   u64 s | f64 F | f64 params... | [adam: f64 lr, β1, β2, ε | u64 t | f64 m... | f64 v...]
// flags: bit 0 masking, bit 1 output shift, bit 2 Adam state present.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  SparseNetwork net;
  std::optional<AdamState> adam;
};

void write_checkpoint(std::ostream& out, const SparseNetwork& net, const AdamState* adam = nullptr);
Checkpoint read_checkpoint(std::istream& in);
void write_checkpoint(const std::string& path, const SparseNetwork& net, const AdamState* adam = nullptr);
Checkpoint read_checkpoint(const std::string& path);

/// JSON sidecar written next to a checkpoint.
struct CheckpointMeta {
  std::string arch;
  std::uint64_t seed = 0;
  std::size_t epoch = 0;
  double validation_error = 0.0;
  std::size_t budget = 0;
  double clamp = 0.0;
};

void write_checkpoint_meta(const std::string& path, const CheckpointMeta& meta);
CheckpointMeta read_checkpoint_meta(const std::string& path);

}  // namespace driftnn
