#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <stdexcept>

namespace roomsense::protosim {

struct EncodeError : std::range_error {
  using std::range_error::range_error;
};

/// Largest magnitude accepted by the x100 wire encoding.
inline constexpr double kFixedPointLimit = 2147483648.0 / 100.0 - 1.0;

/// round(v * 100), ties away from zero. Throws EncodeError when |v| exceeds the limit
/// or v is not finite.
std::int32_t to_fixed_point(double v);
inline double from_fixed_point(std::int32_t raw) { return static_cast<double>(raw) / 100.0; }

/// Signed 32-bit little-endian of to_fixed_point(v).
std::array<std::uint8_t, 4> encode_fixed_point(double v);
double decode_fixed_point(std::span<const std::uint8_t, 4> bytes);

void put_u16le(std::uint8_t* out, std::uint16_t v);
void put_u32le(std::uint8_t* out, std::uint32_t v);
std::uint16_t get_u16le(const std::uint8_t* in);
std::uint32_t get_u32le(const std::uint8_t* in);

}  // namespace roomsense::protosim
