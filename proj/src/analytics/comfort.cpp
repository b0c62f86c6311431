#include "roomsense/analytics/comfort.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "roomsense/tstore/store.hpp"

namespace roomsense::analytics {

void validate_band(const ComfortBand& b) {
  if (!std::isfinite(b.lo) || !std::isfinite(b.hi) || !std::isfinite(b.span))
    throw std::invalid_argument("comfort band bounds must be finite");
  if (!(b.lo < b.hi))
    throw std::invalid_argument(fmt::format("comfort band for {}: lo must be below hi", metric_name(b.metric)));
  if (!(b.span > 0))
    throw std::invalid_argument(fmt::format("comfort band for {}: span must be positive", metric_name(b.metric)));
}

BandSet default_bands() {
  return {{Metric::humidity, ComfortBand{Metric::humidity, 40.0, 50.0, 15.0}},
          {Metric::temperature, ComfortBand{Metric::temperature, 21.0, 25.0, 5.0}}};
}

double comfort_score(double value, const ComfortBand& band) {
  if (value < band.lo) return std::max(0.0, 1.0 - (band.lo - value) / band.span);
  if (value > band.hi) return std::max(0.0, 1.0 - (value - band.hi) / band.span);
  return 1.0;
}

std::string_view comfort_flag_name(ComfortFlag f) {
  switch (f) {
    case ComfortFlag::ok: return "ok";
    case ComfortFlag::below_band: return "below_band";
    case ComfortFlag::above_band: return "above_band";
    case ComfortFlag::no_data: return "NO_DATA";
  }
  return "";
}

std::string_view light_class_name(LightClass c) {
  return c == LightClass::adequate ? "adequate" : "dim";
}

namespace {

std::optional<double> mean_lux(std::span<const Reading> readings) {
  double sum = 0;
  std::size_t n = 0;
  for (const auto& r : readings) {
    if (r.metric != Metric::light) continue;
    sum += r.value;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

}  // namespace

std::optional<LightClass> classify_light(std::span<const Reading> readings, double threshold) {
  const auto mean = mean_lux(readings);
  if (!mean) return std::nullopt;
  return *mean >= threshold ? LightClass::adequate : LightClass::dim;
}

ComfortReport comfort_report(std::string room_id, std::span<const Reading> readings,
                             const BandSet& bands, double light_threshold) {
  ComfortReport report;
  report.room_id = std::move(room_id);
  double overall = 0;
  std::size_t with_data = 0;
  for (const auto& [metric, band] : bands) {
    MetricComfort mc;
    mc.metric = metric;
    double value_sum = 0, score_sum = 0;
    for (const auto& r : readings) {
      if (r.metric != metric) continue;
      value_sum += r.value;
      score_sum += comfort_score(r.value, band);
      ++mc.samples;
    }
    if (mc.samples > 0) {
      const auto n = static_cast<double>(mc.samples);
      mc.mean_value = value_sum / n;
      mc.mean_score = score_sum / n;
      mc.flag = mc.mean_value < band.lo   ? ComfortFlag::below_band
                : mc.mean_value > band.hi ? ComfortFlag::above_band
                                          : ComfortFlag::ok;
      overall += mc.mean_score;
      ++with_data;
    }
    report.metrics.push_back(mc);
  }
  if (with_data > 0) report.overall = overall / static_cast<double>(with_data);
  report.mean_lux = mean_lux(readings);
  report.light = classify_light(readings, light_threshold);
  return report;
}

ComfortReport comfort_report(const tstore::Store& store, const std::string& room_id, SimInstant from,
                             SimInstant to, const BandSet& bands, double light_threshold) {
  tstore::QueryRange q;
  q.room_id = room_id;
  q.from = from;
  q.to = to;
  const auto readings = store.query(q);
  return comfort_report(room_id, readings, bands, light_threshold);
}

}  // namespace roomsense::analytics
