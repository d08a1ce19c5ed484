#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>

#include "atnj/tensor.hpp"

namespace atnj {

// Little-endian primitive I/O shared by every binary file format.
namespace wire {
void put_u8(std::ostream& os, std::uint8_t v);
void put_u32(std::ostream& os, std::uint32_t v);
void put_f32(std::ostream& os, float v);
std::uint8_t get_u8(std::istream& is);
std::uint32_t get_u32(std::istream& is);
float get_f32(std::istream& is);
void expect_magic(std::istream& is, const char magic[4], const char* what);
}  // namespace wire

// ".ten" tensor format: magic "ATNJ", u8 version=1, u8 ndim, ndim u32
// little-endian dims, then the f32 payload little-endian. Bit-exact.
void write_tensor(std::ostream& os, const Tensor& t);
Tensor read_tensor(std::istream& is);

void save_tensor(const std::string& path, const Tensor& t);
Tensor load_tensor(const std::string& path);

}  // namespace atnj
