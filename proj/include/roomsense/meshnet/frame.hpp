#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "roomsense/core/reading.hpp"
#include "roomsense/protosim/codec.hpp"

namespace roomsense::meshnet {

using protosim::Bytes;
using protosim::CodecError;
using protosim::Decoded;

inline constexpr std::uint8_t kMeshSof = 0x5B;
inline constexpr std::uint16_t kBroadcast = 0xFFFF;
inline constexpr std::size_t kMaxPayload = 64;
inline constexpr std::size_t kMeshHeaderSize = 11;  // including the trailing checksum

enum class FrameType : std::uint8_t { data = 0x00, rreq = 0x01, rrep = 0x02 };

/// 5B type src[2] dst[2] seq ttl hops plen payload chk; u16 fields little-endian,
/// chk = XOR of every preceding byte.
struct MeshFrame {
  FrameType type = FrameType::data;
  std::uint16_t src = 0;
  std::uint16_t dst = 0;
  std::uint8_t seq = 0;
  std::uint8_t ttl = 0;
  std::uint8_t hops = 0;
  std::vector<std::uint8_t> payload;

  friend bool operator==(const MeshFrame&, const MeshFrame&) = default;
};

/// Throws protosim::EncodeError when the payload exceeds 64 bytes.
Bytes encode_mesh(const MeshFrame& f);
/// Unknown type bytes decode to BAD_SOF since the type is part of the frame header
/// identity; payload lengths above 64 are BAD_LENGTH.
Decoded<MeshFrame> decode_mesh(std::span<const std::uint8_t> bytes);

/// Sensor sample carried inside DATA frames: metric u8, x100 value i32, ts u32.
struct SensorPayload {
  Metric metric = Metric::temperature;
  std::int32_t raw_value = 0;
  std::uint32_t ts = 0;

  double value() const { return static_cast<double>(raw_value) / 100.0; }
  friend bool operator==(const SensorPayload&, const SensorPayload&) = default;
};

inline constexpr std::size_t kSensorPayloadSize = 9;

Bytes encode_sensor_payload(const SensorPayload& p);
std::optional<SensorPayload> decode_sensor_payload(std::span<const std::uint8_t> bytes);

}  // namespace roomsense::meshnet
