#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <vector>

#include "roomsense/core/device.hpp"
#include "roomsense/core/time.hpp"

namespace roomsense::protosim {

/// baseline + amplitude * cos(2*pi*(t - peak_offset)/period) + N(0, sigma), clamped.
///
/// The sinusoid peaks at `peak_offset` into each period (measured
/// from the UTC day start when period is 24 h). Noise is a pure function of
/// (seed, metric, whole second), so any two samplers agree on the value at an instant.
struct SignalModel {
  double baseline = 0.0;
  double amplitude = 0.0;
  SimDuration period = sim_hours(24);
  SimDuration peak_offset = sim_hours(15);
  double noise_sigma = 0.0;
  std::uint64_t seed = 0;
  std::optional<double> min;
  std::optional<double> max;

  double sample(Metric metric, SimInstant t) const;
};

struct ScriptEvent {
  SimInstant at;
  Metric metric = Metric::door;  // door or motion
  bool on = false;
};

struct ScanEntry {
  SimInstant from;
  std::vector<MacAddress> macs;
};

struct SimDeviceConfig {
  DeviceDescriptor descriptor;
  std::map<Metric, SignalModel> signals;
  /// Door/motion playback for zwave_sim devices, sorted by instant.
  std::vector<ScriptEvent> events;
  /// Nearby addresses a ble_sim device reports on SCAN; the latest entry with
  /// from <= now applies.
  std::vector<ScanEntry> scan_script;
  /// Reporting period of zigbee_sim sensor nodes.
  SimDuration report_interval = sim_seconds(60);

  std::vector<MacAddress> nearby_at(SimInstant t) const;
};

}  // namespace roomsense::protosim
