#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "roomsense/core/metric.hpp"
#include "roomsense/core/time.hpp"

namespace roomsense {

enum class Protocol { ble_sim, zwave_sim, zigbee_sim };

std::string_view protocol_name(Protocol p);
std::optional<Protocol> parse_protocol(std::string_view name);

struct MacAddress {
  std::array<std::uint8_t, 6> bytes{};

  /// "AA:BB:CC:DD:EE:FF" (case-insensitive on input, upper case on output).
  static std::optional<MacAddress> parse(std::string_view text);
  std::string to_string() const;

  friend auto operator<=>(const MacAddress&, const MacAddress&) = default;
};

struct ZwaveNodeId {
  std::uint8_t value = 0;
  friend auto operator<=>(const ZwaveNodeId&, const ZwaveNodeId&) = default;
};

struct MeshNodeId {
  std::uint16_t value = 0;
  friend auto operator<=>(const MeshNodeId&, const MeshNodeId&) = default;
};

using DeviceAddress = std::variant<MacAddress, ZwaveNodeId, MeshNodeId>;

std::string format_address(const DeviceAddress& a);

struct DeviceDescriptor {
  std::string device_id;
  Protocol protocol = Protocol::ble_sim;
  DeviceAddress address;
  std::string room_id;
  std::vector<Metric> metrics;
  /// Only meaningful for ble_sim devices.
  std::optional<SimDuration> poll_interval;
};

/// Empty when valid; otherwise human-readable problems (address width mismatch, ...).
std::vector<std::string> validate_descriptor(const DeviceDescriptor& d);

}  // namespace roomsense
