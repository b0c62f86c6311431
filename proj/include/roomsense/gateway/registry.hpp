#pragma once

#include <cstdint>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "roomsense/core/device.hpp"
#include "roomsense/net/socket.hpp"

namespace roomsense::gateway {

enum class Liveness { online, stale, offline };
std::string_view liveness_name(Liveness l);

enum class RegistryError { duplicate_id, unsupported_protocol, invalid_descriptor };
std::string_view registry_error_name(RegistryError e);

enum class PollFault { timeout, bad_crc, unknown_char, bad_frame };
std::string_view poll_fault_name(PollFault f);

inline constexpr SimDuration kDefaultPollInterval = sim_seconds(60);
inline constexpr SimDuration kPushLivenessBase = sim_seconds(600);
inline constexpr int kFaultLimit = 5;

/// online while now - last_seen <= 2 * base, stale up to 5 * base, offline after.
Liveness liveness_at(SimInstant last_seen, SimDuration base, SimInstant now);

struct DeviceEntry {
  DeviceDescriptor descriptor;
  std::optional<net::Endpoint> endpoint;
  SimInstant registered_at{};
  std::optional<SimInstant> last_seen;
  int consecutive_faults = 0;
  std::map<PollFault, std::uint64_t> faults;
  bool suspended = false;  // consecutive fault limit reached; polling stops

  /// Poll interval for ble_sim, 600 sim-seconds for push devices.
  SimDuration liveness_base() const;
  Liveness liveness(SimInstant now) const;
};

/// Device registry. Thread-safe.
class Registry {
 public:
  explicit Registry(std::set<Protocol> supported = {Protocol::ble_sim, Protocol::zwave_sim,
                                                   Protocol::zigbee_sim});

  std::optional<RegistryError> add(const DeviceDescriptor& d, std::optional<net::Endpoint> endpoint,
                                   SimInstant now);

  std::optional<DeviceEntry> get(const std::string& device_id) const;
  std::vector<DeviceEntry> list() const;
  std::optional<std::string> by_zwave(std::uint8_t node) const;
  std::optional<std::string> by_mesh(std::uint16_t node) const;
  std::set<std::string> rooms() const;

  void mark_seen(const std::string& device_id, SimInstant now);
  /// Returns true when this fault suspended the device.
  bool record_fault(const std::string& device_id, PollFault f);

 private:
  std::set<Protocol> supported_;
  mutable std::mutex mu_;
  std::map<std::string, DeviceEntry> devices_;
};

enum class JobKind { read, scan };

/// Fixed-rate job: next_due advances by exactly `interval` per run.
struct PollJob {
  std::string device_id;
  JobKind kind = JobKind::read;
  Metric metric = Metric::temperature;  // read jobs
  std::uint8_t char_id = 0;
  SimInstant next_due{};
  SimDuration interval = kDefaultPollInterval;
};

/// Jobs of all devices, ordered by (next_due, device_id, kind, char_id). Used by the
/// single evaluation activity only.
class Scheduler {
 public:
  void add(PollJob job);
  /// Jobs due at `now` in execution order; each one's next_due is advanced (slots
  /// already in the past are skipped, not replayed).
  std::vector<PollJob> take_due(SimInstant now);
  std::optional<SimInstant> next_due() const;
  std::vector<PollJob> jobs() const { return jobs_; }
  std::size_t size() const { return jobs_.size(); }
  std::size_t skipped() const { return skipped_; }

 private:
  std::vector<PollJob> jobs_;
  std::size_t skipped_ = 0;
};

}  // namespace roomsense::gateway
