#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <mutex>
#include <optional>
#include <thread>
#include <vector>

#include "roomsense/core/sim_clock.hpp"
#include "roomsense/net/socket.hpp"
#include "roomsense/protosim/codec.hpp"
#include "roomsense/protosim/sim_device.hpp"

namespace roomsense::protosim {

/// A simulated SensorTag-style device serving READ, SUBSCRIBE and SCAN over one
/// stream socket. Frames on a connection are handled one at a time.
class BleDevice {
 public:
  /// Throws std::invalid_argument when the config is not a ble_sim device with
  /// metrics drawn from temperature/humidity/light/pressure, and net::NetError when
  /// the endpoint cannot be bound.
  BleDevice(SimDeviceConfig cfg, const net::Endpoint& listen, SimClock& clock);
  ~BleDevice();

  BleDevice(const BleDevice&) = delete;
  BleDevice& operator=(const BleDevice&) = delete;

  const net::Endpoint& endpoint() const { return endpoint_; }
  const SimDeviceConfig& config() const { return cfg_; }

  /// Response the device gives for `req` at `now`; the pure core of the server.
  std::optional<BleFrame> respond(const BleRequest& req, SimInstant now) const;

  std::uint64_t frames_sent() const { return frames_sent_.load(); }
  std::uint64_t malformed_received() const { return malformed_.load(); }

  void stop();

 private:
  void serve(std::stop_token stop);
  void handle_connection(net::TcpStream& conn, std::stop_token stop);
  void send(net::TcpStream& conn, const BleFrame& f);
  void start_subscription(net::TcpStream& conn, std::uint8_t char_id);

  SimDeviceConfig cfg_;
  SimClock& clock_;
  net::TcpListener listener_;
  net::Endpoint endpoint_;
  std::mutex write_mu_;
  std::vector<std::jthread> subscriptions_;
  std::atomic<std::uint64_t> frames_sent_{0};
  std::atomic<std::uint64_t> malformed_{0};
  std::jthread server_;
};

/// A simulated Aeon-style node: plays back door/motion scripts as pushed frames and
/// answers relay_set with relay_ack. Pushes go to the most recent connection.
class ZwaveDevice {
 public:
  ZwaveDevice(SimDeviceConfig cfg, const net::Endpoint& listen, SimClock& clock);
  ~ZwaveDevice();

  ZwaveDevice(const ZwaveDevice&) = delete;
  ZwaveDevice& operator=(const ZwaveDevice&) = delete;

  const net::Endpoint& endpoint() const { return endpoint_; }
  const SimDeviceConfig& config() const { return cfg_; }
  std::uint8_t node_id() const;

  /// Starts script playback on the clock. Frames falling due while no client is
  /// connected are dropped and counted. Returns once playback is registered with
  /// the clock, so a stepped driver cannot skip past the first event.
  void start_script();

  std::uint64_t frames_sent() const { return frames_sent_.load(); }
  std::uint64_t frames_dropped() const { return frames_dropped_.load(); }
  /// Complete frames read from the client, valid or not.
  std::uint64_t frames_received() const { return frames_received_.load(); }
  bool relay_on() const { return relay_on_.load(); }
  bool has_client() const;

  void stop();

 private:
  void serve(std::stop_token stop);
  void play(std::stop_token stop);
  void handle_frame(std::span<const std::uint8_t> buf);
  bool push(const ZwaveFrame& f);

  SimDeviceConfig cfg_;
  SimClock& clock_;
  net::TcpListener listener_;
  net::Endpoint endpoint_;
  mutable std::mutex conn_mu_;
  std::shared_ptr<net::TcpStream> conn_;
  std::uint8_t seq_ = 0;
  std::atomic<bool> relay_on_{false};
  std::atomic<std::uint64_t> frames_sent_{0};
  std::atomic<std::uint64_t> frames_dropped_{0};
  std::atomic<std::uint64_t> frames_received_{0};
  std::jthread server_;
  std::jthread player_;
};

}  // namespace roomsense::protosim
