#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace driftnn {

/// SplitMix64 finalizer. Used to derive independent seeds from structured keys.
std::uint64_t mix64(std::uint64_t x) noexcept;

/// Derives a child seed from a parent seed and an ordered list of keys.
/// Pure function of its inputs, so any stream can be regenerated in isolation.
std::uint64_t derive_seed(std::uint64_t parent, std::initializer_list<std::uint64_t> keys) noexcept;

/// Generator used for every random stream in the library.
using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine{mix64(seed)}; }

}  // namespace driftnn
