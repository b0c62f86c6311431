#pragma once

#include <cstdint>
#include <span>

namespace roomsense::protosim {

/// CRC-8: polynomial 0x07, init 0x00, MSB-first, no reflection, no final XOR.
std::uint8_t crc8(std::span<const std::uint8_t> data);

/// Left fold of XOR with identity 0x00.
std::uint8_t xor_checksum(std::span<const std::uint8_t> data);

}  // namespace roomsense::protosim
