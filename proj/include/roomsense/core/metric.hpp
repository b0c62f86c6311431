#pragma once

#include <array>
#include <optional>
#include <string_view>

namespace roomsense {

enum class Metric {
  temperature,
  humidity,
  light,
  pressure,
  door,
  motion,
  relay,
  outdoor_temperature,
  camera_count,
  presence,
};

inline constexpr std::array<Metric, 10> all_metrics{
    Metric::temperature, Metric::humidity,     Metric::light,
    Metric::pressure,    Metric::door,         Metric::motion,
    Metric::relay,       Metric::outdoor_temperature, Metric::camera_count,
    Metric::presence,
};

/// "C", "%RH", "lux", "mbar", "bool" or "persons".
std::string_view canonical_unit(Metric m);

/// snake_case identifier used in files, JSON and configuration.
std::string_view metric_name(Metric m);
std::optional<Metric> parse_metric(std::string_view name);

/// door, motion, relay, presence.
bool is_binary(Metric m);

}  // namespace roomsense
