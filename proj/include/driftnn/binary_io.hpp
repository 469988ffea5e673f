#pragma once

#include <cstdint>
#include <istream>
#include <ostream>
#include <span>
#include <string_view>
#include <vector>

namespace driftnn::io {

// Little-endian primitives shared by the trajectory, checkpoint and spline model files.

void write_u32(std::ostream& out, std::uint32_t v);
void write_u64(std::ostream& out, std::uint64_t v);
void write_f64(std::ostream& out, double v);
void write_f64s(std::ostream& out, std::span<const double> values);
void write_magic(std::ostream& out, std::string_view magic);

std::uint32_t read_u32(std::istream& in);
std::uint64_t read_u64(std::istream& in);
double read_f64(std::istream& in);
void read_f64s(std::istream& in, std::span<double> values);
/// Throws std::runtime_error when the next bytes are not `magic`.
void expect_magic(std::istream& in, std::string_view magic);

}  // namespace driftnn::io
