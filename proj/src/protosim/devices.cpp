#include "roomsense/protosim/devices.hpp"

#include <latch>
#include <stdexcept>

#include <spdlog/spdlog.h>

#include "roomsense/protosim/fixed_point.hpp"

namespace roomsense::protosim {

using namespace std::chrono_literals;

namespace {

constexpr auto kPollSlice = 50ms;

}  // namespace

// ---------------------------------------------------------------------------
// BleDevice

BleDevice::BleDevice(SimDeviceConfig cfg, const net::Endpoint& listen, SimClock& clock)
    : cfg_(std::move(cfg)), clock_(clock) {
  if (cfg_.descriptor.protocol != Protocol::ble_sim)
    throw std::invalid_argument("BleDevice requires a ble_sim descriptor");
  for (Metric m : cfg_.descriptor.metrics)
    if (!char_for_metric(m))
      throw std::invalid_argument(
          fmt::format("ble_sim device cannot serve metric {}", metric_name(m)));
  listener_ = net::TcpListener::bind(listen);
  endpoint_ = listener_.local_endpoint();
  server_ = std::jthread([this](std::stop_token st) { serve(st); });
}

BleDevice::~BleDevice() { stop(); }

void BleDevice::stop() {
  server_.request_stop();
  if (server_.joinable()) server_.join();
  listener_.close();
}

std::optional<BleFrame> BleDevice::respond(const BleRequest& req, SimInstant now) const {
  const auto ts = static_cast<std::uint32_t>(epoch_seconds(now));
  switch (req.op) {
    case kOpRead:
    case kOpSubscribe: {
      const auto metric = metric_for_char(req.char_id);
      const bool served =
          metric && std::find(cfg_.descriptor.metrics.begin(), cfg_.descriptor.metrics.end(),
                              *metric) != cfg_.descriptor.metrics.end();
      if (!served) return BleResponse{req.char_id, kStatusUnknownChar, 0, ts};
      const auto model = cfg_.signals.find(*metric);
      const double v = model == cfg_.signals.end() ? 0.0 : model->second.sample(*metric, now);
      return BleResponse{req.char_id, kStatusOk, to_fixed_point(v), ts};
    }
    case kOpScan:
      return BleScanResponse{cfg_.nearby_at(now)};
    default:
      return std::nullopt;
  }
}

void BleDevice::send(net::TcpStream& conn, const BleFrame& f) {
  const Bytes wire = encode_ble(f);
  std::lock_guard lock(write_mu_);
  conn.write_all(wire);
  ++frames_sent_;
}

void BleDevice::serve(std::stop_token stop) {
  while (!stop.stop_requested()) {
    auto conn = listener_.accept(kPollSlice);
    if (!conn) continue;
    handle_connection(*conn, stop);
    for (auto& s : subscriptions_) s.request_stop();
    subscriptions_.clear();
  }
}

void BleDevice::handle_connection(net::TcpStream& conn, std::stop_token stop) {
  std::array<std::uint8_t, 4> buf{};
  while (!stop.stop_requested()) {
    const auto ready = conn.wait_readable(kPollSlice);
    if (ready == net::IoStatus::timeout) continue;
    if (ready == net::IoStatus::closed) return;
    if (conn.read_exact(std::span(buf).first(1), 1s) != net::IoStatus::ok) return;
    if (buf[0] != kBleRequest) {
      // Resynchronise on the next request kind byte.
      ++malformed_;
      spdlog::debug("{}: dropping stray byte {:#04x}", cfg_.descriptor.device_id, buf[0]);
      continue;
    }
    if (conn.read_exact(std::span(buf).subspan(1), 1s) != net::IoStatus::ok) return;
    const auto decoded = decode_ble(buf);
    const auto* frame = std::get_if<BleFrame>(&decoded);
    const auto* req = frame ? std::get_if<BleRequest>(frame) : nullptr;
    if (!req) {
      ++malformed_;
      spdlog::warn("{}: malformed request ({})", cfg_.descriptor.device_id,
                   frame ? "not a request" : codec_error_name(std::get<CodecError>(decoded)));
      continue;
    }
    const auto reply = respond(*req, clock_.now());
    if (!reply) {
      ++malformed_;
      spdlog::warn("{}: unsupported op {:#04x}", cfg_.descriptor.device_id, req->op);
      continue;
    }
    try {
      send(conn, *reply);
    } catch (const net::NetError& e) {
      spdlog::debug("{}: {}", cfg_.descriptor.device_id, e.what());
      return;
    }
    const auto* resp = std::get_if<BleResponse>(&*reply);
    if (req->op == kOpSubscribe && resp && resp->status == kStatusOk)
      start_subscription(conn, req->char_id);
  }
}

void BleDevice::start_subscription(net::TcpStream& conn, std::uint8_t char_id) {
  const SimDuration interval = cfg_.descriptor.poll_interval.value_or(sim_seconds(60));
  std::latch registered(1);
  subscriptions_.emplace_back([this, &conn, char_id, interval, &registered](std::stop_token st) {
    SimClock::Participation participation(clock_);
    SimInstant next = clock_.now() + interval;
    registered.count_down();
    while (clock_.wait_until(next, st)) {
      const auto reply = respond(BleRequest{kOpSubscribe, char_id}, next);
      try {
        send(conn, *reply);
      } catch (const net::NetError&) {
        return;
      }
      next += interval;
    }
  });
  registered.wait();
}

// ---------------------------------------------------------------------------
// ZwaveDevice

ZwaveDevice::ZwaveDevice(SimDeviceConfig cfg, const net::Endpoint& listen, SimClock& clock)
    : cfg_(std::move(cfg)), clock_(clock) {
  if (cfg_.descriptor.protocol != Protocol::zwave_sim)
    throw std::invalid_argument("ZwaveDevice requires a zwave_sim descriptor");
  if (!std::is_sorted(cfg_.events.begin(), cfg_.events.end(),
                      [](const auto& a, const auto& b) { return a.at < b.at; }))
    throw std::invalid_argument("event script must be sorted by instant");
  listener_ = net::TcpListener::bind(listen);
  endpoint_ = listener_.local_endpoint();
  server_ = std::jthread([this](std::stop_token st) { serve(st); });
}

ZwaveDevice::~ZwaveDevice() { stop(); }

void ZwaveDevice::stop() {
  player_.request_stop();
  server_.request_stop();
  if (player_.joinable()) player_.join();
  if (server_.joinable()) server_.join();
  listener_.close();
}

std::uint8_t ZwaveDevice::node_id() const {
  return std::get<ZwaveNodeId>(cfg_.descriptor.address).value;
}

bool ZwaveDevice::has_client() const {
  std::lock_guard lock(conn_mu_);
  return conn_ != nullptr;
}

bool ZwaveDevice::push(const ZwaveFrame& f) {
  std::lock_guard lock(conn_mu_);
  if (!conn_) return false;
  try {
    conn_->write_all(encode_zwave(f));
  } catch (const net::NetError&) {
    conn_.reset();
    return false;
  }
  ++frames_sent_;
  return true;
}

void ZwaveDevice::start_script() {
  if (player_.joinable()) return;
  std::latch registered(1);
  player_ = std::jthread([this, &registered](std::stop_token st) {
    SimClock::Participation participation(clock_);
    registered.count_down();
    play(st);
  });
  registered.wait();
}

void ZwaveDevice::play(std::stop_token stop) {
  for (const auto& ev : cfg_.events) {
    if (!clock_.wait_until(ev.at, stop)) return;
    const std::uint8_t cmd = ev.metric == Metric::motion ? kCmdMotion : kCmdDoor;
    ZwaveFrame f{node_id(), cmd, ev.on ? kZwaveOn : kZwaveOff, seq_++};
    if (!push(f)) {
      ++frames_dropped_;
      spdlog::debug("{}: no client for scripted frame", cfg_.descriptor.device_id);
    }
  }
}

void ZwaveDevice::handle_frame(std::span<const std::uint8_t> buf) {
  const auto decoded = decode_zwave(buf);
  const auto* f = std::get_if<ZwaveFrame>(&decoded);
  if (!f) {
    spdlog::warn("{}: ignoring frame ({})", cfg_.descriptor.device_id,
                 codec_error_name(std::get<CodecError>(decoded)));
    return;
  }
  if (f->cmd_class != kCmdRelaySet) return;
  relay_on_ = f->value != kZwaveOff;
  push(ZwaveFrame{node_id(), kCmdRelayAck, f->value, f->seq});
}

void ZwaveDevice::serve(std::stop_token stop) {
  while (!stop.stop_requested()) {
    auto accepted = listener_.accept(kPollSlice);
    if (!accepted) continue;
    auto conn = std::make_shared<net::TcpStream>(std::move(*accepted));
    {
      std::lock_guard lock(conn_mu_);
      conn_ = conn;
    }
    std::array<std::uint8_t, kZwaveFrameSize> buf{};
    while (!stop.stop_requested()) {
      const auto ready = conn->wait_readable(kPollSlice);
      if (ready == net::IoStatus::timeout) continue;
      if (ready == net::IoStatus::closed) break;
      if (conn->read_exact(std::span(buf).first(1), 1s) != net::IoStatus::ok) break;
      if (buf[0] != kZwaveSof) continue;
      if (conn->read_exact(std::span(buf).subspan(1), 1s) != net::IoStatus::ok) break;
      handle_frame(buf);
      ++frames_received_;  // after any ack went out, so drivers can wait on both counters
    }
    std::lock_guard lock(conn_mu_);
    if (conn_ == conn) conn_.reset();
  }
}

}  // namespace roomsense::protosim
