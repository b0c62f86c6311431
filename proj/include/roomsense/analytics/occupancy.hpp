#pragma once

#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "roomsense/core/device.hpp"
#include "roomsense/core/time.hpp"

namespace roomsense::analytics {

enum class OccupancyKind { door_open, door_closed, motion, camera_count, presence_seen };
std::string_view occupancy_kind_name(OccupancyKind k);

struct OccupancyEvent {
  std::string room_id;
  OccupancyKind kind = OccupancyKind::motion;
  double value = 0.0;
  SimInstant ts{};
};

/// Type invariant: camera counts are non-negative whole numbers and door/motion
/// values are 0 or 1.
bool is_valid(const OccupancyEvent& e);

struct OccupancyStep {
  SimInstant ts{};
  int count = 0;
};

struct OccupancyLedger {
  std::vector<OccupancyStep> steps;          // starts with (t0, 0); one step per change
  std::vector<OccupancyEvent> annotations;   // door/motion/presence transitions, unattributed
  std::size_t rejected = 0;                  // events failing the type invariant

  /// Count in effect at t (0 before the first step).
  int count_at(SimInstant t) const;
};

/// Camera counts set the count; other kinds are recorded as annotations only.
/// Events must be sorted by ts.
OccupancyLedger occupancy_ledger(SimInstant t0, const std::vector<OccupancyEvent>& events);

struct ScanSample {
  SimInstant ts{};
  std::set<MacAddress> macs;
};

inline constexpr SimDuration kPresenceWindow = sim_seconds(120);

/// Present iff the MAC appears in a scan with ts in (at - window, at].
bool presence(const std::vector<ScanSample>& history, const MacAddress& mac, SimInstant at,
              SimDuration window = kPresenceWindow);

}  // namespace roomsense::analytics
