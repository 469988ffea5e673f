#include "driftnn/binary_io.hpp"

#include <array>
#include <bit>
#include <stdexcept>
#include <string>

namespace driftnn::io {

namespace {

template <typename T>
T to_little(T v) {
  if constexpr (std::endian::native == std::endian::big) {
    auto bytes = std::bit_cast<std::array<unsigned char, sizeof(T)>>(v);
    std::array<unsigned char, sizeof(T)> swapped{};
    for (std::size_t i = 0; i < sizeof(T); ++i) swapped[i] = bytes[sizeof(T) - 1 - i];
    return std::bit_cast<T>(swapped);
  } else {
    return v;
  }
}

template <typename T>
void put(std::ostream& out, T v) {
  v = to_little(v);
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw std::runtime_error("unexpected end of binary stream");
  return to_little(v);
}

}  // namespace

void write_u32(std::ostream& out, std::uint32_t v) { put(out, v); }
void write_u64(std::ostream& out, std::uint64_t v) { put(out, v); }
void write_f64(std::ostream& out, double v) { put(out, std::bit_cast<std::uint64_t>(v)); }

void write_f64s(std::ostream& out, std::span<const double> values) {
  for (double v : values) write_f64(out, v);
}

void write_magic(std::ostream& out, std::string_view magic) {
  out.write(magic.data(), static_cast<std::streamsize>(magic.size()));
}

std::uint32_t read_u32(std::istream& in) { return get<std::uint32_t>(in); }
std::uint64_t read_u64(std::istream& in) { return get<std::uint64_t>(in); }
double read_f64(std::istream& in) { return std::bit_cast<double>(get<std::uint64_t>(in)); }

void read_f64s(std::istream& in, std::span<double> values) {
  for (double& v : values) v = read_f64(in);
}

void expect_magic(std::istream& in, std::string_view magic) {
  std::string buf(magic.size(), '\0');
  in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
  if (!in || buf != magic) {
    throw std::runtime_error("bad magic bytes: expected '" + std::string(magic) + "'");
  }
}

}  // namespace driftnn::io
