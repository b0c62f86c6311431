#include "roomsense/protosim/checksum.hpp"

#include <array>

namespace roomsense::protosim {

namespace {

constexpr std::array<std::uint8_t, 256> make_crc8_table() {
  std::array<std::uint8_t, 256> table{};
  for (unsigned i = 0; i < 256; ++i) {
    unsigned crc = i;
    for (int bit = 0; bit < 8; ++bit) crc = (crc & 0x80) ? ((crc << 1) ^ 0x07) : (crc << 1);
    table[i] = static_cast<std::uint8_t>(crc & 0xFF);
  }
  return table;
}

constexpr auto kCrc8Table = make_crc8_table();

}  // namespace

std::uint8_t crc8(std::span<const std::uint8_t> data) {
  std::uint8_t crc = 0x00;
  for (std::uint8_t b : data) crc = kCrc8Table[crc ^ b];
  return crc;
}

std::uint8_t xor_checksum(std::span<const std::uint8_t> data) {
  std::uint8_t acc = 0x00;
  for (std::uint8_t b : data) acc ^= b;
  return acc;
}

}  // namespace roomsense::protosim
