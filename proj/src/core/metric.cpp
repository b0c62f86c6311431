#include "roomsense/core/metric.hpp"

namespace roomsense {

std::string_view canonical_unit(Metric m) {
  switch (m) {
    case Metric::temperature:
    case Metric::outdoor_temperature:
      return "C";
    case Metric::humidity:
      return "%RH";
    case Metric::light:
      return "lux";
    case Metric::pressure:
      return "mbar";
    case Metric::door:
    case Metric::motion:
    case Metric::relay:
    case Metric::presence:
      return "bool";
    case Metric::camera_count:
      return "persons";
  }
  return "";
}

std::string_view metric_name(Metric m) {
  switch (m) {
    case Metric::temperature: return "temperature";
    case Metric::humidity: return "humidity";
    case Metric::light: return "light";
    case Metric::pressure: return "pressure";
    case Metric::door: return "door";
    case Metric::motion: return "motion";
    case Metric::relay: return "relay";
    case Metric::outdoor_temperature: return "outdoor_temperature";
    case Metric::camera_count: return "camera_count";
    case Metric::presence: return "presence";
  }
  return "";
}

std::optional<Metric> parse_metric(std::string_view name) {
  for (Metric m : all_metrics)
    if (metric_name(m) == name) return m;
  return std::nullopt;
}

bool is_binary(Metric m) {
  return m == Metric::door || m == Metric::motion || m == Metric::relay ||
         m == Metric::presence;
}

}  // namespace roomsense
