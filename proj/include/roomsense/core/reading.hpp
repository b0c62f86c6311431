#pragma once

#include <string>
#include <vector>

#include "roomsense/core/metric.hpp"
#include "roomsense/core/time.hpp"

namespace roomsense {

/// One timestamped measurement in the metric's canonical unit.
struct Reading {
  std::string device_id;
  std::string room_id;
  Metric metric = Metric::temperature;
  double value = 0.0;
  SimInstant timestamp{};

  friend bool operator==(const Reading&, const Reading&) = default;
};

/// Value-level invariant violations of a reading, e.g. "humidity range".
/// Per-stream timestamp monotonicity is enforced by the store, not here.
std::vector<std::string> validate_reading(const Reading& r);

inline bool is_valid(const Reading& r) { return validate_reading(r).empty(); }

}  // namespace roomsense
