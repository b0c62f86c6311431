#include "roomsense/meshnet/frame.hpp"

#include "roomsense/protosim/checksum.hpp"
#include "roomsense/protosim/fixed_point.hpp"

namespace roomsense::meshnet {

using protosim::get_u16le;
using protosim::get_u32le;
using protosim::put_u16le;
using protosim::put_u32le;

Bytes encode_mesh(const MeshFrame& f) {
  if (f.payload.size() > kMaxPayload) throw protosim::EncodeError("mesh payload exceeds 64 bytes");
  Bytes out(10);
  out[0] = kMeshSof;
  out[1] = static_cast<std::uint8_t>(f.type);
  put_u16le(&out[2], f.src);
  put_u16le(&out[4], f.dst);
  out[6] = f.seq;
  out[7] = f.ttl;
  out[8] = f.hops;
  out[9] = static_cast<std::uint8_t>(f.payload.size());
  out.insert(out.end(), f.payload.begin(), f.payload.end());
  out.push_back(protosim::xor_checksum(out));
  return out;
}

Decoded<MeshFrame> decode_mesh(std::span<const std::uint8_t> bytes) {
  if (bytes.empty()) return CodecError::bad_length;
  if (bytes[0] != kMeshSof) return CodecError::bad_sof;
  if (bytes.size() < kMeshHeaderSize) return CodecError::bad_length;
  if (bytes[1] > static_cast<std::uint8_t>(FrameType::rrep)) return CodecError::bad_sof;
  const std::size_t plen = bytes[9];
  if (plen > kMaxPayload || bytes.size() != kMeshHeaderSize + plen) return CodecError::bad_length;
  if (protosim::xor_checksum(bytes.first(bytes.size() - 1)) != bytes.back())
    return CodecError::bad_chk;
  MeshFrame f;
  f.type = static_cast<FrameType>(bytes[1]);
  f.src = get_u16le(&bytes[2]);
  f.dst = get_u16le(&bytes[4]);
  f.seq = bytes[6];
  f.ttl = bytes[7];
  f.hops = bytes[8];
  f.payload.assign(bytes.begin() + 10, bytes.begin() + 10 + static_cast<std::ptrdiff_t>(plen));
  return f;
}

Bytes encode_sensor_payload(const SensorPayload& p) {
  Bytes out(kSensorPayloadSize);
  out[0] = static_cast<std::uint8_t>(p.metric);
  put_u32le(&out[1], static_cast<std::uint32_t>(p.raw_value));
  put_u32le(&out[5], p.ts);
  return out;
}

std::optional<SensorPayload> decode_sensor_payload(std::span<const std::uint8_t> bytes) {
  if (bytes.size() != kSensorPayloadSize) return std::nullopt;
  if (bytes[0] >= all_metrics.size()) return std::nullopt;
  return SensorPayload{all_metrics[bytes[0]], static_cast<std::int32_t>(get_u32le(&bytes[1])),
                       get_u32le(&bytes[5])};
}

}  // namespace roomsense::meshnet
