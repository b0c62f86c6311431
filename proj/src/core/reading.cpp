#include "roomsense/core/reading.hpp"

#include <cmath>

namespace roomsense {

std::vector<std::string> validate_reading(const Reading& r) {
  std::vector<std::string> out;
  if (r.device_id.empty()) out.emplace_back("device_id empty");
  if (!std::isfinite(r.value)) {
    out.emplace_back("value finite");
    return out;
  }
  const double v = r.value;
  switch (r.metric) {
    case Metric::humidity:
      if (v < 0.0 || v > 100.0) out.emplace_back("humidity range");
      break;
    case Metric::light:
      if (v < 0.0) out.emplace_back("light non-negative");
      break;
    case Metric::pressure:
      if (v < 800.0 || v > 1200.0) out.emplace_back("pressure range");
      break;
    case Metric::temperature:
      if (v < -60.0 || v > 60.0) out.emplace_back("temperature range");
      break;
    case Metric::outdoor_temperature:
      if (v < -60.0 || v > 60.0) out.emplace_back("outdoor_temperature range");
      break;
    case Metric::camera_count:
      if (v < 0.0) out.emplace_back("camera_count non-negative");
      break;
    case Metric::door:
    case Metric::motion:
    case Metric::relay:
    case Metric::presence:
      if (v != 0.0 && v != 1.0) out.emplace_back(std::string(metric_name(r.metric)) + " binary");
      break;
  }
  return out;
}

}  // namespace roomsense
