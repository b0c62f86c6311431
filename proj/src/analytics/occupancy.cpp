#include "roomsense/analytics/occupancy.hpp"

#include <cmath>

namespace roomsense::analytics {

std::string_view occupancy_kind_name(OccupancyKind k) {
  switch (k) {
    case OccupancyKind::door_open: return "door_open";
    case OccupancyKind::door_closed: return "door_closed";
    case OccupancyKind::motion: return "motion";
    case OccupancyKind::camera_count: return "camera_count";
    case OccupancyKind::presence_seen: return "presence_seen";
  }
  return "";
}

bool is_valid(const OccupancyEvent& e) {
  if (!std::isfinite(e.value)) return false;
  switch (e.kind) {
    case OccupancyKind::camera_count:
      return e.value >= 0 && e.value == std::floor(e.value);
    case OccupancyKind::door_open:
    case OccupancyKind::door_closed:
    case OccupancyKind::motion:
      return e.value == 0.0 || e.value == 1.0;
    case OccupancyKind::presence_seen:
      return true;
  }
  return false;
}

int OccupancyLedger::count_at(SimInstant t) const {
  int count = 0;
  for (const auto& s : steps) {
    if (s.ts > t) break;
    count = s.count;
  }
  return count;
}

OccupancyLedger occupancy_ledger(SimInstant t0, const std::vector<OccupancyEvent>& events) {
  OccupancyLedger ledger;
  ledger.steps.push_back({t0, 0});
  for (const auto& e : events) {
    if (!is_valid(e)) {
      ++ledger.rejected;
      continue;
    }
    if (e.kind != OccupancyKind::camera_count) {
      ledger.annotations.push_back(e);
      continue;
    }
    const int count = static_cast<int>(e.value);
    if (count != ledger.steps.back().count) ledger.steps.push_back({e.ts, count});
  }
  return ledger;
}

bool presence(const std::vector<ScanSample>& history, const MacAddress& mac, SimInstant at,
              SimDuration window) {
  for (const auto& scan : history) {
    if (scan.ts <= at - window || scan.ts > at) continue;
    if (scan.macs.count(mac)) return true;
  }
  return false;
}

}  // namespace roomsense::analytics
