#pragma once

#include <atomic>
#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <vector>

#include "roomsense/core/sim_clock.hpp"
#include "roomsense/gateway/gateway.hpp"
#include "roomsense/protosim/devices.hpp"
#include "roomsense/scenario/scenario.hpp"

namespace roomsense::scenario {

gateway::GatewayConfig gateway_config(const Scenario& sc);

/// The scenario's ble_sim and zwave_sim devices, each listening on its configured
/// endpoint (or an ephemeral port).
class DeviceFarm {
 public:
  DeviceFarm(const Scenario& sc, SimClock& clock);
  ~DeviceFarm();

  /// Endpoint of a served device; empty for mesh devices.
  std::optional<net::Endpoint> endpoint(const std::string& device_id) const;
  const std::vector<std::unique_ptr<protosim::BleDevice>>& ble() const { return ble_; }
  const std::vector<std::unique_ptr<protosim::ZwaveDevice>>& zwave() const { return zwave_; }

  /// Waits (wall) until every zwave device has a client.
  bool wait_clients(std::chrono::milliseconds timeout) const;
  void start_scripts();
  void stop();

 private:
  std::vector<std::unique_ptr<protosim::BleDevice>> ble_;
  std::vector<std::unique_ptr<protosim::ZwaveDevice>> zwave_;
};

struct SimulationOptions {
  std::optional<std::filesystem::path> store;  // overrides the scenario
  std::optional<bool> paced;                   // overrides the scenario
  /// Serve the HTTP API while the simulation runs.
  std::optional<net::Endpoint> api;
  std::function<void(const net::Endpoint&)> on_api_ready;
  /// Checked between steps; the run ends early once set.
  const std::atomic<bool>* interrupt = nullptr;
  bool durable = true;
};

struct SimulationResult {
  SimInstant start{};
  SimInstant reached{};
  bool interrupted = false;
  std::uint64_t steps = 0;
  gateway::GatewayStats stats;
  std::uint64_t mesh_reports = 0;
  std::uint64_t mesh_delivered = 0;
  std::uint64_t mesh_failed = 0;
  std::uint64_t zwave_dropped = 0;
  std::chrono::duration<double> wall{};
};

/// Runs the scenario on a stepped clock from start to end (exclusive), advancing
/// straight to the next instant any activity has work for. With paced set, sim
/// time tracks compression * wall time.
///
/// The store is the only output. Two runs of the same scenario into empty stores
/// produce identical files.
SimulationResult run_simulation(const Scenario& sc, const SimulationOptions& opts = {});

}  // namespace roomsense::scenario
