#pragma once

#include <optional>
#include <string>

#include <json.hpp>

#include "roomsense/analytics/comfort.hpp"
#include "roomsense/analytics/feedback.hpp"
#include "roomsense/analytics/occupancy.hpp"
#include "roomsense/automation/engine.hpp"
#include "roomsense/core/reading.hpp"

namespace roomsense::gateway {

using Json = nlohmann::json;

/// {"device_id","room_id","metric","value","unit","ts"}
Json reading_json(const Reading& r);
Json feedback_json(const analytics::FeedbackRecord& f);
Json band_json(const analytics::ComfortBand& b);
Json relay_json(const automation::RelayState& s);
Json comfort_json(const analytics::ComfortReport& r, const analytics::BandSet& bands, double light_threshold);
Json occupancy_json(const std::string& room_id, const analytics::OccupancyLedger& ledger, int count);

/// Empty with `error` set when the object is malformed or the band invalid.
std::optional<analytics::ComfortBand> band_from_json(const Json& j, std::string& error);

}  // namespace roomsense::gateway
