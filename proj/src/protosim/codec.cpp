#include "roomsense/protosim/codec.hpp"

#include <algorithm>

#include "roomsense/protosim/checksum.hpp"
#include "roomsense/protosim/fixed_point.hpp"

namespace roomsense::protosim {

std::string_view codec_error_name(CodecError e) {
  switch (e) {
    case CodecError::bad_sof: return "BAD_SOF";
    case CodecError::bad_length: return "BAD_LENGTH";
    case CodecError::bad_crc: return "BAD_CRC";
    case CodecError::bad_chk: return "BAD_CHK";
  }
  return "";
}

namespace {

struct BleEncoder {
  Bytes operator()(const BleRequest& r) const { return {kBleRequest, r.op, r.char_id}; }

  Bytes operator()(const BleResponse& r) const {
    Bytes out(11);
    out[0] = kBleResponse;
    out[1] = r.char_id;
    out[2] = r.status;
    put_u32le(&out[3], static_cast<std::uint32_t>(r.raw_value));
    put_u32le(&out[7], r.ts);
    return out;
  }

  Bytes operator()(const BleScanResponse& r) const {
    if (r.macs.size() > 255) throw EncodeError("scan response holds at most 255 addresses");
    Bytes out{kBleScanResponse, static_cast<std::uint8_t>(r.macs.size())};
    for (const auto& mac : r.macs) out.insert(out.end(), mac.bytes.begin(), mac.bytes.end());
    return out;
  }
};

}  // namespace

Bytes encode_ble(const BleFrame& f) {
  Bytes out = std::visit(BleEncoder{}, f);
  out.push_back(crc8(out));
  return out;
}

int ble_wire_size(std::span<const std::uint8_t> head) {
  if (head.empty()) return 0;
  switch (head[0]) {
    case kBleRequest: return 4;
    case kBleResponse: return 12;
    case kBleScanResponse: return head.size() < 2 ? 0 : 3 + 6 * head[1];
    default: return -1;
  }
}

Decoded<BleFrame> decode_ble(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return CodecError::bad_length;
  const int expected = ble_wire_size(bytes);
  if (expected < 0) return CodecError::bad_sof;
  if (expected == 0 || bytes.size() != static_cast<std::size_t>(expected))
    return CodecError::bad_length;
  if (crc8(bytes.first(bytes.size() - 1)) != bytes.back()) return CodecError::bad_crc;

  switch (bytes[0]) {
    case kBleRequest:
      return BleRequest{bytes[1], bytes[2]};
    case kBleResponse:
      return BleResponse{bytes[1], bytes[2], static_cast<std::int32_t>(get_u32le(&bytes[3])),
                         get_u32le(&bytes[7])};
    default: {
      BleScanResponse scan;
      scan.macs.resize(bytes[1]);
      for (std::size_t i = 0; i < scan.macs.size(); ++i)
        std::copy_n(&bytes[2 + 6 * i], 6, scan.macs[i].bytes.begin());
      return scan;
    }
  }
}

std::optional<Metric> metric_for_char(std::uint8_t char_id) {
  switch (char_id) {
    case kCharTemperature: return Metric::temperature;
    case kCharHumidity: return Metric::humidity;
    case kCharLight: return Metric::light;
    case kCharPressure: return Metric::pressure;
    default: return std::nullopt;
  }
}

std::optional<std::uint8_t> char_for_metric(Metric m) {
  switch (m) {
    case Metric::temperature: return kCharTemperature;
    case Metric::humidity: return kCharHumidity;
    case Metric::light: return kCharLight;
    case Metric::pressure: return kCharPressure;
    default: return std::nullopt;
  }
}

Bytes encode_zwave(const ZwaveFrame& f) {
  Bytes out{kZwaveSof, f.node_id, f.cmd_class, f.value, f.seq};
  out.push_back(xor_checksum(out));
  return out;
}

Decoded<ZwaveFrame> decode_zwave(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return CodecError::bad_length;
  if (bytes[0] != kZwaveSof) return CodecError::bad_sof;
  if (bytes.size() != kZwaveFrameSize) return CodecError::bad_length;
  if (xor_checksum(bytes.first(5)) != bytes[5]) return CodecError::bad_chk;
  return ZwaveFrame{bytes[1], bytes[2], bytes[3], bytes[4]};
}

}  // namespace roomsense::protosim
