#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "roomsense/core/reading.hpp"

namespace roomsense::tstore {
class Store;
}

namespace roomsense::analytics {

/// Ideal band [lo, hi] with a linear decay of width `span` on either side.
struct ComfortBand {
  Metric metric = Metric::humidity;
  double lo = 0.0;
  double hi = 0.0;
  double span = 1.0;

  friend bool operator==(const ComfortBand&, const ComfortBand&) = default;
};

/// Throws std::invalid_argument unless lo < hi, span > 0 and all are finite.
void validate_band(const ComfortBand& b);

using BandSet = std::map<Metric, ComfortBand>;
/// humidity [40,50] span 15; temperature [21,25] span 5.
BandSet default_bands();

inline constexpr double kDefaultLightThreshold = 300.0;

/// 1 inside [lo,hi], 0 at lo-span / hi+span and beyond, linear in between.
double comfort_score(double value, const ComfortBand& band);

enum class ComfortFlag { ok, below_band, above_band, no_data };
std::string_view comfort_flag_name(ComfortFlag f);

enum class LightClass { adequate, dim };
std::string_view light_class_name(LightClass c);

struct MetricComfort {
  Metric metric = Metric::humidity;
  std::size_t samples = 0;
  double mean_value = 0.0;
  double mean_score = 0.0;
  ComfortFlag flag = ComfortFlag::no_data;
};

struct ComfortReport {
  std::string room_id;
  std::vector<MetricComfort> metrics;  // one per band, NO_DATA included
  std::optional<double> overall;       // mean over metrics with data
  std::optional<LightClass> light;     // empty when there is no light data
  std::optional<double> mean_lux;
};

/// Mean lux >= threshold is adequate. Empty when no light readings are given.
std::optional<LightClass> classify_light(std::span<const Reading> readings,
                                         double threshold = kDefaultLightThreshold);

/// Aggregates the given readings (already narrowed to one room and window);
/// readings of metrics without a band are ignored apart from light.
ComfortReport comfort_report(std::string room_id, std::span<const Reading> readings,
                             const BandSet& bands, double light_threshold = kDefaultLightThreshold);

ComfortReport comfort_report(const tstore::Store& store, const std::string& room_id, SimInstant from,
                             SimInstant to, const BandSet& bands,
                             double light_threshold = kDefaultLightThreshold);

}  // namespace roomsense::analytics
