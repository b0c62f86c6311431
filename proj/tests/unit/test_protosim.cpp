#include <doctest.h>

#include <random>
#include <string_view>
#include <thread>

#include "roomsense/protosim/checksum.hpp"
#include "roomsense/protosim/codec.hpp"
#include "roomsense/protosim/devices.hpp"
#include "roomsense/protosim/fixed_point.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace roomsense;
using namespace roomsense::protosim;
using namespace std::chrono_literals;

namespace {

Bytes ascii(std::string_view s) { return Bytes(s.begin(), s.end()); }

template <class T, class V>
bool holds(const V& v) {
  return std::holds_alternative<T>(v);
}

}  // namespace

// ---------------------------------------------------------------------------
// checksums

TEST_CASE("crc8 oracle agrees on the check string") {
  const Bytes check = ascii("123456789");
  CHECK(oracle::crc8_shift_register(check) == 0xF4);
  CHECK(crc8(check) == 0xF4);
}

TEST_CASE("crc8 examples") {
  CHECK(crc8(Bytes{}) == 0x00);
  CHECK(crc8(Bytes{0x00}) == 0x00);
}

TEST_CASE("crc8 table matches shift register for every single byte and random inputs") {
  for (int b = 0; b < 256; ++b) {
    const Bytes one{static_cast<std::uint8_t>(b)};
    CHECK(crc8(one) == oracle::crc8_shift_register(one));
  }
  std::mt19937_64 rng(7);
  for (int i = 0; i < 1000; ++i) {
    Bytes data(std::uniform_int_distribution<int>(0, 64)(rng));
    for (auto& x : data) x = gen::byte(rng);
    REQUIRE(crc8(data) == oracle::crc8_shift_register(data));
  }
}

TEST_CASE("xor checksum examples") {
  CHECK(xor_checksum(Bytes{}) == 0x00);
  CHECK(xor_checksum(Bytes{0x7E}) == 0x7E);
  const Bytes frame{0x5A, 0x01, 0x20, 0xFF, 0x00};
  CHECK(oracle::xor_fold(frame) == 0x84);
  CHECK(xor_checksum(frame) == 0x84);
}

// ---------------------------------------------------------------------------
// fixed point

TEST_CASE("fixed point encoding examples") {
  using A = std::array<std::uint8_t, 4>;
  CHECK(encode_fixed_point(0.0) == A{0x00, 0x00, 0x00, 0x00});
  CHECK(encode_fixed_point(23.45) == A{0x29, 0x09, 0x00, 0x00});
  CHECK(encode_fixed_point(-1.00) == A{0x9C, 0xFF, 0xFF, 0xFF});
  const auto o1 = oracle::le_twos_complement32(2345);
  const auto o2 = oracle::le_twos_complement32(-100);
  CHECK(std::equal(o1.begin(), o1.end(), encode_fixed_point(23.45).begin()));
  CHECK(std::equal(o2.begin(), o2.end(), encode_fixed_point(-1.0).begin()));
}

TEST_CASE("fixed point rounds ties away from zero") {
  CHECK(to_fixed_point(0.125) == 13);
  CHECK(to_fixed_point(-0.125) == -13);
  CHECK(to_fixed_point(0.004) == 0);
  CHECK(to_fixed_point(-0.006) == -1);
}

TEST_CASE("fixed point overflow is an encoding error") {
  CHECK_NOTHROW(to_fixed_point(kFixedPointLimit));
  CHECK_NOTHROW(to_fixed_point(-kFixedPointLimit));
  CHECK_THROWS_AS(to_fixed_point(kFixedPointLimit + 0.01), EncodeError);
  CHECK_THROWS_AS(to_fixed_point(-kFixedPointLimit - 0.01), EncodeError);
  CHECK_THROWS_AS(to_fixed_point(std::numeric_limits<double>::quiet_NaN()), EncodeError);
}

TEST_CASE("fixed point round trip equals value rounded to hundredths") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-1e6, 1e6);
  for (int i = 0; i < 10000; ++i) {
    const double v = d(rng);
    const auto bytes = encode_fixed_point(v);
    CHECK(decode_fixed_point(bytes) == static_cast<double>(std::llround(v * 100.0)) / 100.0);
  }
}

// ---------------------------------------------------------------------------
// BLE codec

TEST_CASE("ble request wire layout") {
  const Bytes wire = encode_ble(BleRequest{kOpRead, kCharTemperature});
  const Bytes head{0xB1, 0x01, 0x01};
  REQUIRE(wire.size() == 4);
  CHECK(Bytes(wire.begin(), wire.begin() + 3) == head);
  CHECK(wire[3] == oracle::crc8_shift_register(head));
}

TEST_CASE("ble frame sizes") {
  CHECK(encode_ble(BleResponse{}).size() == 12);
  CHECK(encode_ble(BleScanResponse{}).size() == 3);
  CHECK(encode_ble(BleScanResponse{{MacAddress{}, MacAddress{}}}).size() == 15);
  CHECK_THROWS_AS(encode_ble(BleScanResponse{std::vector<MacAddress>(256)}), EncodeError);
}

TEST_CASE("ble response encodes value and timestamp little-endian") {
  const Bytes wire = encode_ble(BleResponse{kCharHumidity, kStatusOk, 2800, 0x01020304});
  CHECK(wire[1] == kCharHumidity);
  CHECK(wire[3] == 0xF0);
  CHECK(wire[4] == 0x0A);
  CHECK(wire[7] == 0x04);
  CHECK(wire[10] == 0x01);
}

TEST_CASE("ble round trip over random frames") {
  std::mt19937_64 rng(2017);
  for (int i = 0; i < 10000; ++i) {
    const BleFrame f = gen::ble_frame(rng);
    const auto decoded = decode_ble(encode_ble(f));
    REQUIRE(holds<BleFrame>(decoded));
    REQUIRE(std::get<BleFrame>(decoded) == f);
  }
}

TEST_CASE("ble decode errors name the first failed check") {
  CHECK(std::get<CodecError>(decode_ble(Bytes{})) == CodecError::bad_length);
  CHECK(std::get<CodecError>(decode_ble(Bytes{0x42, 0x01, 0x01, 0x00})) == CodecError::bad_sof);
  CHECK(std::get<CodecError>(decode_ble(Bytes{0xB1, 0x01, 0x01})) == CodecError::bad_length);
  Bytes wire = encode_ble(BleRequest{kOpRead, kCharHumidity});
  wire[2] ^= 0x01;
  CHECK(std::get<CodecError>(decode_ble(wire)) == CodecError::bad_crc);
  CHECK(std::get<CodecError>(decode_ble(Bytes{0xB3})) == CodecError::bad_length);
}

TEST_CASE("ble single-byte payload flip is always BAD_CRC") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 200; ++i) {
    const Bytes wire = encode_ble(gen::ble_frame(rng));
    // Payload bytes: everything after the kind byte that does not change the length.
    for (std::size_t pos = 1; pos < wire.size(); ++pos) {
      if (wire[0] == kBleScanResponse && pos == 1) continue;
      for (int flip = 1; flip < 256; ++flip) {
        Bytes bad = wire;
        bad[pos] ^= static_cast<std::uint8_t>(flip);
        REQUIRE(std::get<CodecError>(decode_ble(bad)) == CodecError::bad_crc);
      }
    }
  }
}

TEST_CASE("ble decode is total over short random byte strings") {
  std::mt19937_64 rng(5);
  for (int i = 0; i < 20000; ++i) {
    Bytes data(std::uniform_int_distribution<int>(0, 20)(rng));
    for (auto& b : data) b = gen::byte(rng);
    if (i % 3 == 0 && !data.empty()) data[0] = gen::pick(rng, {0xB1, 0xB2, 0xB3});
    const auto decoded = decode_ble(data);
    if (const auto* f = std::get_if<BleFrame>(&decoded)) CHECK(encode_ble(*f) == data);
  }
}

// ---------------------------------------------------------------------------
// Z-Wave codec

TEST_CASE("zwave door-open frame layout") {
  const Bytes wire = encode_zwave(ZwaveFrame{0x01, kCmdDoor, kZwaveOn, 0});
  CHECK(wire == Bytes{0x5A, 0x01, 0x20, 0xFF, 0x00, 0x84});
}

TEST_CASE("zwave round trip and errors") {
  std::mt19937_64 rng(3);
  for (int i = 0; i < 10000; ++i) {
    const ZwaveFrame f = gen::zwave_frame(rng);
    const auto decoded = decode_zwave(encode_zwave(f));
    REQUIRE(holds<ZwaveFrame>(decoded));
    REQUIRE(std::get<ZwaveFrame>(decoded) == f);
  }
  const Bytes wire = encode_zwave(ZwaveFrame{1, kCmdDoor, kZwaveOn, 0});
  CHECK(std::get<CodecError>(decode_zwave(std::span(wire).first(5))) == CodecError::bad_length);
  Bytes bad = wire;
  bad[0] = 0x5B;
  CHECK(std::get<CodecError>(decode_zwave(bad)) == CodecError::bad_sof);
  bad = wire;
  bad[3] = 0x00;
  CHECK(std::get<CodecError>(decode_zwave(bad)) == CodecError::bad_chk);
}

TEST_CASE("zwave sequence numbers wrap") {
  const auto decoded = decode_zwave(encode_zwave(ZwaveFrame{9, kCmdMotion, kZwaveOn, 255}));
  CHECK(std::get<ZwaveFrame>(decoded).seq == 255);
  std::uint8_t seq = 255;
  ++seq;
  CHECK(std::get<ZwaveFrame>(decode_zwave(encode_zwave(ZwaveFrame{9, kCmdMotion, 0, seq}))).seq == 0);
}

// ---------------------------------------------------------------------------
// signal model

TEST_CASE("signal model is deterministic and respects clamps") {
  const auto t0 = *parse_iso8601("2017-03-01T00:00:00Z");
  SignalModel m{22.0, 2.0, sim_hours(24), sim_hours(15), 0.5, 42, std::nullopt, std::nullopt};
  CHECK(m.sample(Metric::temperature, t0 + 10s) == m.sample(Metric::temperature, t0 + 10s));
  CHECK(m.sample(Metric::temperature, t0 + 10s) != m.sample(Metric::humidity, t0 + 10s));
  SignalModel flat{28.0, 0.0};
  CHECK(flat.sample(Metric::humidity, t0) == 28.0);
  SignalModel peak{10.0, 5.0};
  CHECK(peak.sample(Metric::light, t0 + 15h) == doctest::Approx(15.0));
  CHECK(peak.sample(Metric::light, t0 + 3h) == doctest::Approx(5.0));
  SignalModel capped{28.0, 5.0, sim_hours(24), sim_hours(15), 1.0, 1, 0.0, 29.5};
  for (int i = 0; i < 1440; ++i) CHECK(capped.sample(Metric::humidity, t0 + i * 1min) <= 29.5);
}

// ---------------------------------------------------------------------------
// simulated devices

namespace {

const SimInstant kEpoch = *parse_iso8601("2017-03-01T00:00:00Z");
const net::Endpoint kAny{"127.0.0.1", 0};

SimDeviceConfig ble_config() {
  SimDeviceConfig cfg;
  cfg.descriptor = DeviceDescriptor{"tag-dorm1", Protocol::ble_sim, *MacAddress::parse("C8:0F:10:00:00:01"),
                                    "dorm1",
                                    {Metric::temperature, Metric::humidity, Metric::light, Metric::pressure},
                                    sim_seconds(60)};
  cfg.signals[Metric::humidity] = SignalModel{28.0, 0.0};
  cfg.signals[Metric::temperature] = SignalModel{22.0, 2.0, sim_hours(24), sim_hours(15), 0.3, 5};
  cfg.scan_script = {{kEpoch, {*MacAddress::parse("AA:BB:CC:00:00:01")}},
                     {kEpoch + 1h, {}}};
  return cfg;
}

BleFrame read_ble(net::TcpStream& s) {
  Bytes buf(2);
  REQUIRE(s.read_exact(std::span(buf).first(1), 2s) == net::IoStatus::ok);
  if (buf[0] == kBleScanResponse)
    REQUIRE(s.read_exact(std::span(buf).subspan(1, 1), 2s) == net::IoStatus::ok);
  const int size = ble_wire_size(buf[0] == kBleScanResponse ? std::span(buf) : std::span(buf).first(1));
  REQUIRE(size > 0);
  const std::size_t have = buf[0] == kBleScanResponse ? 2 : 1;
  buf.resize(static_cast<std::size_t>(size));
  REQUIRE(s.read_exact(std::span(buf).subspan(have), 2s) == net::IoStatus::ok);
  const auto decoded = decode_ble(buf);
  REQUIRE(holds<BleFrame>(decoded));
  return std::get<BleFrame>(decoded);
}

Bytes read_raw(net::TcpStream& s, std::size_t n) {
  Bytes buf(n);
  REQUIRE(s.read_exact(buf, 2s) == net::IoStatus::ok);
  return buf;
}

}  // namespace

TEST_CASE("ble device answers READ from its signal model") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  BleDevice dev(ble_config(), kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  conn.write_all(encode_ble(BleRequest{kOpRead, kCharHumidity}));
  const auto resp = std::get<BleResponse>(read_ble(conn));
  CHECK(resp.status == kStatusOk);
  CHECK(resp.raw_value == 2800);
  CHECK(resp.value() == 28.0);
  CHECK(resp.ts == epoch_seconds(kEpoch));
}

TEST_CASE("ble device reports UNKNOWN_CHAR") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  BleDevice dev(ble_config(), kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  conn.write_all(encode_ble(BleRequest{kOpRead, 0x09}));
  CHECK(std::get<BleResponse>(read_ble(conn)).status == kStatusUnknownChar);
}

TEST_CASE("ble device ignores malformed requests and keeps serving") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  BleDevice dev(ble_config(), kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  Bytes bad = encode_ble(BleRequest{kOpRead, kCharHumidity});
  bad[3] ^= 0xFF;
  conn.write_all(bad);
  conn.write_all(Bytes{0x00, 0x13});
  CHECK(conn.wait_readable(100ms) == net::IoStatus::timeout);
  conn.write_all(encode_ble(BleRequest{kOpRead, kCharHumidity}));
  CHECK(std::get<BleResponse>(read_ble(conn)).raw_value == 2800);
  CHECK(dev.malformed_received() == 3);
}

TEST_CASE("ble device SCAN returns scripted nearby addresses") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  BleDevice dev(ble_config(), kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  conn.write_all(encode_ble(BleRequest{kOpScan, 0}));
  auto scan = std::get<BleScanResponse>(read_ble(conn));
  REQUIRE(scan.macs.size() == 1);
  CHECK(scan.macs[0].to_string() == "AA:BB:CC:00:00:01");
  clock.advance_to(kEpoch + 2h);
  conn.write_all(encode_ble(BleRequest{kOpScan, 0}));
  CHECK(std::get<BleScanResponse>(read_ble(conn)).macs.empty());
}

TEST_CASE("ble device SUBSCRIBE pushes every poll interval") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  BleDevice dev(ble_config(), kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  conn.write_all(encode_ble(BleRequest{kOpSubscribe, kCharTemperature}));
  const auto first = std::get<BleResponse>(read_ble(conn));
  CHECK(first.ts == epoch_seconds(kEpoch));
  for (int i = 1; i <= 3; ++i) {
    REQUIRE(clock.wait_quiescent(2s));
    CHECK(clock.next_wakeup() == kEpoch + i * 60s);
    clock.advance_to(kEpoch + i * 60s);
    const auto pushed = std::get<BleResponse>(read_ble(conn));
    CHECK(pushed.ts == epoch_seconds(kEpoch + i * 60s));
    CHECK(pushed.char_id == kCharTemperature);
  }
}

TEST_CASE("ble device response streams are byte-identical across runs") {
  auto run = [] {
    SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
    BleDevice dev(ble_config(), kAny, clock);
    auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
    Bytes stream;
    for (int i = 0; i < 50; ++i) {
      clock.advance_to(kEpoch + i * 60s);
      for (std::uint8_t c : {kCharTemperature, kCharHumidity}) {
        conn.write_all(encode_ble(BleRequest{kOpRead, c}));
        const Bytes b = read_raw(conn, 12);
        stream.insert(stream.end(), b.begin(), b.end());
      }
    }
    return stream;
  };
  CHECK(run() == run());
}

TEST_CASE("ble device rejects metrics it cannot serve") {
  auto cfg = ble_config();
  cfg.descriptor.metrics.push_back(Metric::door);
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  CHECK_THROWS_AS(BleDevice(cfg, kAny, clock), std::invalid_argument);
}

namespace {

SimDeviceConfig zwave_config(std::vector<ScriptEvent> events) {
  SimDeviceConfig cfg;
  cfg.descriptor = DeviceDescriptor{"door-lab", Protocol::zwave_sim, ZwaveNodeId{1}, "lab", {Metric::door}, {}};
  cfg.events = std::move(events);
  return cfg;
}

}  // namespace

TEST_CASE("zwave device plays back its script with incrementing seq") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  ZwaveDevice dev(zwave_config({{kEpoch + 10s, Metric::door, true}, {kEpoch + 20s, Metric::door, false}}),
                  kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  for (int i = 0; i < 100 && !dev.has_client(); ++i) std::this_thread::sleep_for(5ms);
  dev.start_script();
  REQUIRE(clock.wait_quiescent(2s));
  CHECK(clock.next_wakeup() == kEpoch + 10s);
  clock.advance_to(kEpoch + 10s);
  CHECK(read_raw(conn, 6) == encode_zwave(ZwaveFrame{1, kCmdDoor, kZwaveOn, 0}));
  REQUIRE(clock.wait_quiescent(2s));
  clock.advance_to(kEpoch + 20s);
  CHECK(read_raw(conn, 6) == encode_zwave(ZwaveFrame{1, kCmdDoor, kZwaveOff, 1}));
  REQUIRE(clock.wait_quiescent(2s));
  CHECK(dev.frames_sent() == 2);
  CHECK_FALSE(clock.next_wakeup());
}

TEST_CASE("zwave device with an empty script emits nothing") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  ZwaveDevice dev(zwave_config({}), kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  dev.start_script();
  clock.advance_to(kEpoch + 24h);
  CHECK(conn.wait_readable(100ms) == net::IoStatus::timeout);
  CHECK(dev.frames_sent() == 0);
}

TEST_CASE("zwave relay echoes relay_set and ignores bad checksums") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  auto cfg = zwave_config({});
  cfg.descriptor.metrics = {Metric::relay};
  cfg.descriptor.address = ZwaveNodeId{7};
  ZwaveDevice dev(cfg, kAny, clock);
  auto conn = net::TcpStream::connect(dev.endpoint(), 1s);
  Bytes bad = encode_zwave(ZwaveFrame{7, kCmdRelaySet, kZwaveOn, 3});
  bad[5] ^= 0x10;
  conn.write_all(bad);
  CHECK(conn.wait_readable(100ms) == net::IoStatus::timeout);
  conn.write_all(encode_zwave(ZwaveFrame{7, kCmdRelaySet, kZwaveOn, 4}));
  CHECK(read_raw(conn, 6) == encode_zwave(ZwaveFrame{7, kCmdRelayAck, kZwaveOn, 4}));
  CHECK(dev.relay_on());
}

TEST_CASE("zwave device rejects an unsorted script") {
  SimClock clock(kEpoch, 1.0, SimClock::Mode::stepped, false);
  CHECK_THROWS_AS(ZwaveDevice(zwave_config({{kEpoch + 20s, Metric::door, true},
                                            {kEpoch + 10s, Metric::door, false}}),
                              kAny, clock),
                  std::invalid_argument);
}
