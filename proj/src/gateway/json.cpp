#include "roomsense/gateway/json.hpp"

#include <stdexcept>

namespace roomsense::gateway {

namespace {

Json optional_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json reading_json(const Reading& r) {
  return {{"device_id", r.device_id}, {"room_id", r.room_id},
          {"metric", metric_name(r.metric)}, {"value", r.value},
          {"unit", canonical_unit(r.metric)}, {"ts", format_iso8601(r.timestamp)}};
}

Json feedback_json(const analytics::FeedbackRecord& f) {
  return {{"room", f.room_id}, {"vote", f.vote}, {"note", f.note}, {"ts", format_iso8601(f.ts)}};
}

Json band_json(const analytics::ComfortBand& b) {
  return {{"metric", metric_name(b.metric)}, {"lo", b.lo}, {"hi", b.hi}, {"span", b.span}};
}

Json relay_json(const automation::RelayState& s) {
  Json j{{"relay_id", s.relay_id},
         {"actual", automation::relay_actual_name(s.actual)},
         {"mode", automation::relay_mode_name(s.mode)},
         {"manual_expires", s.manual_expires ? Json(format_iso8601(*s.manual_expires)) : Json(nullptr)},
         {"pending", nullptr}};
  if (s.pending)
    j["pending"] = {{"state", s.pending->on ? "on" : "off"},
                    {"seq", s.pending->seq},
                    {"sent_at", format_iso8601(s.pending->sent_at)},
                    {"retried", s.pending->retried}};
  return j;
}

Json comfort_json(const analytics::ComfortReport& r, const analytics::BandSet& bands, double light_threshold) {
  Json metrics = Json::array();
  for (const auto& m : r.metrics) {
    Json e{{"metric", metric_name(m.metric)},
           {"samples", m.samples},
           {"mean_value", m.samples ? Json(m.mean_value) : Json(nullptr)},
           {"mean_score", m.samples ? Json(m.mean_score) : Json(nullptr)},
           {"flag", analytics::comfort_flag_name(m.flag)}};
    if (auto it = bands.find(m.metric); it != bands.end()) e["band"] = band_json(it->second);
    metrics.push_back(std::move(e));
  }
  return {{"room_id", r.room_id},
          {"metrics", std::move(metrics)},
          {"overall", optional_number(r.overall)},
          {"light",
           {{"class", r.light ? Json(analytics::light_class_name(*r.light)) : Json(nullptr)},
            {"mean_lux", optional_number(r.mean_lux)},
            {"threshold", light_threshold}}}};
}

Json occupancy_json(const std::string& room_id, const analytics::OccupancyLedger& ledger, int count) {
  Json steps = Json::array();
  for (const auto& s : ledger.steps) steps.push_back({{"ts", format_iso8601(s.ts)}, {"count", s.count}});
  Json notes = Json::array();
  for (const auto& e : ledger.annotations)
    notes.push_back({{"kind", analytics::occupancy_kind_name(e.kind)}, {"value", e.value}, {"ts", format_iso8601(e.ts)}});
  return {{"room_id", room_id}, {"count", count}, {"steps", std::move(steps)},
          {"annotations", std::move(notes)}, {"rejected", ledger.rejected}};
}

std::optional<analytics::ComfortBand> band_from_json(const Json& j, std::string& error) {
  if (!j.is_object()) {
    error = "band must be an object";
    return std::nullopt;
  }
  const auto metric = j.contains("metric") && j["metric"].is_string()
                          ? parse_metric(j["metric"].get<std::string>())
                          : std::nullopt;
  if (!metric) {
    error = "band needs a known \"metric\"";
    return std::nullopt;
  }
  for (const char* key : {"lo", "hi"}) {
    if (!j.contains(key) || !j[key].is_number()) {
      error = std::string("band needs a numeric \"") + key + "\"";
      return std::nullopt;
    }
  }
  if (j.contains("span") && !j["span"].is_number()) {
    error = "\"span\" must be a number";
    return std::nullopt;
  }
  analytics::ComfortBand b{*metric, j["lo"].get<double>(), j["hi"].get<double>(),
                           j.value("span", analytics::ComfortBand{}.span)};
  // A partial update keeps the metric's default span when one exists.
  if (!j.contains("span")) {
    const auto defaults = analytics::default_bands();
    if (auto it = defaults.find(*metric); it != defaults.end()) b.span = it->second.span;
  }
  try {
    analytics::validate_band(b);
  } catch (const std::invalid_argument& e) {
    error = e.what();
    return std::nullopt;
  }
  return b;
}

}  // namespace roomsense::gateway
