#include "roomsense/core/device.hpp"

#include <fmt/format.h>

namespace roomsense {

std::string_view protocol_name(Protocol p) {
  switch (p) {
    case Protocol::ble_sim: return "ble_sim";
    case Protocol::zwave_sim: return "zwave_sim";
    case Protocol::zigbee_sim: return "zigbee_sim";
  }
  return "";
}

std::optional<Protocol> parse_protocol(std::string_view name) {
  for (Protocol p : {Protocol::ble_sim, Protocol::zwave_sim, Protocol::zigbee_sim})
    if (protocol_name(p) == name) return p;
  return std::nullopt;
}

namespace {

int hex_digit(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

}  // namespace

std::optional<MacAddress> MacAddress::parse(std::string_view text) {
  if (text.size() != 17) return std::nullopt;
  MacAddress mac;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t at = i * 3;
    if (i > 0 && text[at - 1] != ':') return std::nullopt;
    const int hi = hex_digit(text[at]);
    const int lo = hex_digit(text[at + 1]);
    if (hi < 0 || lo < 0) return std::nullopt;
    mac.bytes[i] = static_cast<std::uint8_t>(hi * 16 + lo);
  }
  return mac;
}

std::string MacAddress::to_string() const {
  return fmt::format("{:02X}:{:02X}:{:02X}:{:02X}:{:02X}:{:02X}", bytes[0], bytes[1], bytes[2],
                     bytes[3], bytes[4], bytes[5]);
}

std::string format_address(const DeviceAddress& a) {
  if (const auto* mac = std::get_if<MacAddress>(&a)) return mac->to_string();
  if (const auto* z = std::get_if<ZwaveNodeId>(&a)) return fmt::format("{}", z->value);
  return fmt::format("0x{:04X}", std::get<MeshNodeId>(a).value);
}

std::vector<std::string> validate_descriptor(const DeviceDescriptor& d) {
  std::vector<std::string> out;
  if (d.device_id.empty()) out.emplace_back("device_id empty");
  const bool width_ok = (d.protocol == Protocol::ble_sim && std::holds_alternative<MacAddress>(d.address)) ||
                        (d.protocol == Protocol::zwave_sim && std::holds_alternative<ZwaveNodeId>(d.address)) ||
                        (d.protocol == Protocol::zigbee_sim && std::holds_alternative<MeshNodeId>(d.address));
  if (!width_ok)
    out.push_back(fmt::format("address width does not match protocol {}", protocol_name(d.protocol)));
  if (d.poll_interval && d.protocol != Protocol::ble_sim)
    out.emplace_back("poll_interval only applies to ble_sim");
  if (d.poll_interval && *d.poll_interval <= SimDuration::zero())
    out.emplace_back("poll_interval must be positive");
  return out;
}

}  // namespace roomsense
