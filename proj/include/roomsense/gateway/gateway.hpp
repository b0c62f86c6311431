#pragma once

#include <atomic>
#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <variant>
#include <vector>

#include "roomsense/analytics/comfort.hpp"
#include "roomsense/analytics/feedback.hpp"
#include "roomsense/analytics/occupancy.hpp"
#include "roomsense/analytics/profile.hpp"
#include "roomsense/analytics/weather.hpp"
#include "roomsense/automation/engine.hpp"
#include "roomsense/core/sim_clock.hpp"
#include "roomsense/gateway/registry.hpp"
#include "roomsense/meshnet/frame.hpp"
#include "roomsense/protosim/codec.hpp"
#include "roomsense/tstore/store.hpp"

namespace roomsense::gateway {

struct GatewayConfig {
  /// Rooms known up front; rooms of registered devices are added automatically.
  std::set<std::string> rooms;
  /// MACs whose presence is tracked per room; BLE devices in such rooms get a SCAN job.
  std::map<std::string, std::set<MacAddress>> tracked_macs;
  analytics::BandSet bands = analytics::default_bands();
  double light_threshold = analytics::kDefaultLightThreshold;
  double alpha = analytics::kDefaultAlpha;
  SimDuration poll_timeout = sim_seconds(2);
  /// Lower bound on the wall-clock wait behind poll_timeout. At high compression two
  /// sim-seconds shrink to about a millisecond, shorter than a loaded scheduler slice.
  std::chrono::milliseconds min_wall_timeout{250};
  std::optional<std::string> weather_url;
  SimDuration weather_interval = sim_seconds(600);
  /// Mesh sink address; zigbee_sim devices are only accepted when set.
  std::optional<std::uint16_t> mesh_sink;
};

enum class IntakeError { unknown_node, unknown_device, invalid };
std::string_view intake_error_name(IntakeError e);

struct GatewayStats {
  std::uint64_t polls_ok = 0;
  std::uint64_t poll_faults = 0;
  std::uint64_t stored = 0;
  std::uint64_t store_rejected = 0;
  std::uint64_t intake_dropped = 0;
  std::uint64_t relay_frames = 0;
  std::uint64_t weather_fetches = 0;
};

/// Fan-out of line-delimited JSON to stream subscribers. A slow subscriber loses
/// its oldest lines rather than blocking ingestion.
class StreamHub {
 public:
  class Subscription {
   public:
    /// Next line, or empty after `wait` without one or once the hub closed.
    std::optional<std::string> next(std::chrono::milliseconds wait);
    bool closed() const;
    std::uint64_t dropped() const;

   private:
    friend class StreamHub;
    mutable std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::string> lines_;
    bool closed_ = false;
    std::uint64_t dropped_ = 0;
  };

  static constexpr std::size_t kMaxQueued = 4096;

  std::shared_ptr<Subscription> subscribe();
  void publish(const std::string& line);
  void close();
  std::size_t subscribers() const;

 private:
  mutable std::mutex mu_;
  std::vector<std::weak_ptr<Subscription>> subs_;
  bool closed_ = false;
};

enum class OperatorMode { manual, automatic, clear };
std::optional<OperatorMode> parse_operator_mode(std::string_view s);

struct RelayResult {
  automation::RelayState state;
  bool frame_sent = false;
};

class BleLink;
class ZwaveLink;

/// Device registry, polling scheduler, intake from every protocol and the single
/// evaluation activity that feeds the automation engine.
///
/// The evaluation activity is step(): either driven by start() (a scheduler thread
/// on a free-running clock) or called directly by a stepped simulation driver.
class Gateway {
 public:
  Gateway(GatewayConfig cfg, SimClock& clock, tstore::Store& store, automation::Engine& engine);
  ~Gateway();

  Gateway(const Gateway&) = delete;
  Gateway& operator=(const Gateway&) = delete;

  /// `endpoint` is where ble_sim/zwave_sim devices listen; mesh devices have none.
  std::optional<RegistryError> register_device(const DeviceDescriptor& d,
                                               std::optional<net::Endpoint> endpoint = std::nullopt);
  void register_camera(const std::string& camera_id, const std::string& room_id);

  /// Opens the stream of every zwave_sim device and starts its reader.
  void connect_push_devices();

  /// Runs due polls and scans, the weather fetch, ack timeouts and rule evaluation.
  void step(SimInstant now);
  /// Earliest instant at which step() has scheduled work.
  std::optional<SimInstant> next_due() const;

  std::variant<Reading, PollFault> poll_once(const PollJob& job);

  std::optional<IntakeError> intake_zwave(const protosim::ZwaveFrame& f);
  std::optional<IntakeError> intake_mesh(std::uint16_t node, const meshnet::SensorPayload& p);
  std::optional<IntakeError> intake_camera(const std::string& camera_id, int count, SimInstant at);

  /// Operator relay control. `on` is required for manual and automatic.
  std::variant<RelayResult, automation::AutomationError> set_relay(const std::string& relay_id,
                                                                   OperatorMode mode,
                                                                   std::optional<bool> on);

  /// Starts the scheduler thread (free-running clocks).
  void start();
  void stop();
  /// Wakes the scheduler for an event-driven evaluation.
  void notify();

  const Registry& registry() const { return registry_; }
  std::vector<PollJob> jobs() const;
  std::set<std::string> rooms() const;
  bool has_room(const std::string& room_id) const;
  bool has_device(const std::string& device_id) const;
  std::map<std::string, std::string> cameras() const;

  /// Latest stored reading per (device, metric) of the room, ordered by metric.
  std::vector<Reading> latest_for_room(const std::string& room_id) const;

  analytics::BandSet bands() const;
  /// Throws std::invalid_argument for an invalid band.
  void set_band(const analytics::ComfortBand& b);
  double light_threshold() const { return cfg_.light_threshold; }
  analytics::ComfortReport comfort(const std::string& room_id, SimInstant from, SimInstant to) const;

  analytics::OccupancyLedger occupancy(const std::string& room_id) const;
  int occupancy_count(const std::string& room_id) const;

  const analytics::HourlyProfile& profile() const { return profile_; }

  /// Appends to {store}/feedback.jsonl as well.
  void add_feedback(const analytics::FeedbackRecord& f);
  std::vector<analytics::FeedbackRecord> feedback() const;

  StreamHub& stream() { return stream_; }
  GatewayStats stats() const;
  SimClock& clock() { return clock_; }
  tstore::Store& store() { return store_; }
  automation::Engine& engine() { return engine_; }

  /// Z-Wave frames fully handled per device, and relay_set frames written to it.
  std::uint64_t zwave_frames_received(const std::string& device_id) const;
  std::uint64_t zwave_frames_written(const std::string& device_id) const;

 private:
  void ingest(Reading r);
  void send_commands(const std::vector<automation::RelayCommand>& cmds);
  bool send_command(const automation::RelayCommand& c);
  void run_scan(const PollJob& job, SimInstant now);
  void run_weather(SimInstant now);
  void evaluate(SimInstant now);
  std::chrono::milliseconds wall_timeout() const;
  void record_occupancy(analytics::OccupancyEvent e);
  void scheduler_loop(std::stop_token stop);

  GatewayConfig cfg_;
  SimClock& clock_;
  tstore::Store& store_;
  automation::Engine& engine_;
  Registry registry_;
  analytics::HourlyProfile profile_;
  std::unique_ptr<analytics::WeatherClient> weather_;
  StreamHub stream_;

  mutable std::mutex step_mu_;  // the evaluation activity
  Scheduler scheduler_;
  std::optional<SimInstant> weather_due_;
  std::optional<SimInstant> weather_last_stored_;
  std::optional<SimInstant> next_tick_;

  std::mutex ingest_mu_;  // append -> latest -> publish, in that order

  mutable std::mutex mu_;
  std::set<std::string> rooms_;
  std::map<std::string, std::string> cameras_;
  std::map<std::pair<std::string, Metric>, Reading> latest_;  // (device, metric)
  std::map<std::string, std::vector<analytics::OccupancyEvent>> occupancy_events_;
  std::map<std::string, int> occupancy_count_;
  std::map<std::string, std::vector<analytics::ScanSample>> scans_;
  std::map<std::string, std::set<MacAddress>> present_;
  std::vector<analytics::FeedbackRecord> feedback_;
  GatewayStats stats_;
  SimInstant started_at_;

  std::map<std::string, std::unique_ptr<BleLink>> ble_links_;
  std::map<std::string, std::unique_ptr<ZwaveLink>> zwave_links_;

  std::mutex wake_mu_;
  std::condition_variable_any wake_cv_;
  bool woken_ = false;
  std::jthread scheduler_thread_;
};

}  // namespace roomsense::gateway
