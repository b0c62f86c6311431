#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include "roomsense/core/device.hpp"

namespace roomsense::protosim {

using Bytes = std::vector<std::uint8_t>;

/// First failed check while decoding a frame.
enum class CodecError { bad_sof, bad_length, bad_crc, bad_chk };

std::string_view codec_error_name(CodecError e);

template <class Frame>
using Decoded = std::variant<Frame, CodecError>;

// ---------------------------------------------------------------------------
// BLE-like frames
//
//   request        B1 op char crc                         4 bytes
//   response       B2 char status value[4] ts[4] crc      12 bytes
//   scan_response  B3 count mac[6]*count crc              3 + 6*count bytes
//
// value is signed x100 fixed point, ts is u32 epoch seconds, both little-endian.
// crc is CRC-8/0x07 over every preceding byte.

inline constexpr std::uint8_t kBleRequest = 0xB1;
inline constexpr std::uint8_t kBleResponse = 0xB2;
inline constexpr std::uint8_t kBleScanResponse = 0xB3;

inline constexpr std::uint8_t kOpRead = 0x01;
inline constexpr std::uint8_t kOpSubscribe = 0x02;
inline constexpr std::uint8_t kOpScan = 0x03;

inline constexpr std::uint8_t kCharTemperature = 0x01;
inline constexpr std::uint8_t kCharHumidity = 0x02;
inline constexpr std::uint8_t kCharLight = 0x03;
inline constexpr std::uint8_t kCharPressure = 0x04;

inline constexpr std::uint8_t kStatusOk = 0x00;
inline constexpr std::uint8_t kStatusUnknownChar = 0x01;

struct BleRequest {
  std::uint8_t op = kOpRead;
  std::uint8_t char_id = kCharTemperature;
  friend bool operator==(const BleRequest&, const BleRequest&) = default;
};

struct BleResponse {
  std::uint8_t char_id = kCharTemperature;
  std::uint8_t status = kStatusOk;
  std::int32_t raw_value = 0;  // x100
  std::uint32_t ts = 0;
  double value() const { return static_cast<double>(raw_value) / 100.0; }
  friend bool operator==(const BleResponse&, const BleResponse&) = default;
};

struct BleScanResponse {
  std::vector<MacAddress> macs;  // at most 255
  friend bool operator==(const BleScanResponse&, const BleScanResponse&) = default;
};

using BleFrame = std::variant<BleRequest, BleResponse, BleScanResponse>;

/// Throws EncodeError for a scan response with more than 255 addresses.
Bytes encode_ble(const BleFrame& f);
Decoded<BleFrame> decode_ble(std::span<const std::uint8_t> bytes);

/// Total wire size implied by the leading bytes, or 0 when `head` is too short to
/// tell (scan responses need two bytes). -1 for an unknown kind byte.
int ble_wire_size(std::span<const std::uint8_t> head);

std::optional<Metric> metric_for_char(std::uint8_t char_id);
std::optional<std::uint8_t> char_for_metric(Metric m);

// ---------------------------------------------------------------------------
// Z-Wave-like frames: 5A node cmd value seq chk, chk = XOR of the first five bytes.

inline constexpr std::uint8_t kZwaveSof = 0x5A;
inline constexpr std::size_t kZwaveFrameSize = 6;

inline constexpr std::uint8_t kCmdDoor = 0x20;
inline constexpr std::uint8_t kCmdMotion = 0x30;
inline constexpr std::uint8_t kCmdRelaySet = 0x40;
inline constexpr std::uint8_t kCmdRelayAck = 0x41;

inline constexpr std::uint8_t kZwaveOff = 0x00;
inline constexpr std::uint8_t kZwaveOn = 0xFF;

struct ZwaveFrame {
  std::uint8_t node_id = 0;
  std::uint8_t cmd_class = kCmdDoor;
  std::uint8_t value = kZwaveOff;
  std::uint8_t seq = 0;
  friend bool operator==(const ZwaveFrame&, const ZwaveFrame&) = default;
};

Bytes encode_zwave(const ZwaveFrame& f);
Decoded<ZwaveFrame> decode_zwave(std::span<const std::uint8_t> bytes);

}  // namespace roomsense::protosim
