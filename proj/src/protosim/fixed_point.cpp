#include "roomsense/protosim/fixed_point.hpp"

#include <cmath>

namespace roomsense::protosim {

std::int32_t to_fixed_point(double v) {
  if (!std::isfinite(v) || std::fabs(v) > kFixedPointLimit)
    throw EncodeError("value outside fixed-point range");
  // llround rounds half away from zero.
  return static_cast<std::int32_t>(std::llround(v * 100.0));
}

std::array<std::uint8_t, 4> encode_fixed_point(double v) {
  std::array<std::uint8_t, 4> out{};
  put_u32le(out.data(), static_cast<std::uint32_t>(to_fixed_point(v)));
  return out;
}

double decode_fixed_point(std::span<const std::uint8_t, 4> bytes) {
  return from_fixed_point(static_cast<std::int32_t>(get_u32le(bytes.data())));
}

void put_u16le(std::uint8_t* out, std::uint16_t v) {
  out[0] = static_cast<std::uint8_t>(v & 0xFF);
  out[1] = static_cast<std::uint8_t>(v >> 8);
}

void put_u32le(std::uint8_t* out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out[i] = static_cast<std::uint8_t>((v >> (8 * i)) & 0xFF);
}

std::uint16_t get_u16le(const std::uint8_t* in) {
  return static_cast<std::uint16_t>(in[0] | (in[1] << 8));
}

std::uint32_t get_u32le(const std::uint8_t* in) {
  return static_cast<std::uint32_t>(in[0]) | (static_cast<std::uint32_t>(in[1]) << 8) |
         (static_cast<std::uint32_t>(in[2]) << 16) | (static_cast<std::uint32_t>(in[3]) << 24);
}

}  // namespace roomsense::protosim
