#pragma once

#include <chrono>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>

namespace roomsense {

// Simulated time is UTC wall-calendar time with millisecond resolution.
using SimDuration = std::chrono::milliseconds;
using SimInstant = std::chrono::sys_time<SimDuration>;

constexpr SimDuration sim_seconds(std::int64_t s) { return std::chrono::seconds{s}; }
constexpr SimDuration sim_minutes(std::int64_t m) { return std::chrono::minutes{m}; }
constexpr SimDuration sim_hours(std::int64_t h) { return std::chrono::hours{h}; }

/// ISO-8601 UTC with seconds precision, e.g. 2017-03-01T13:05:00Z.
/// Sub-second parts are truncated toward the past.
std::string format_iso8601(SimInstant t);

/// Accepts "YYYY-MM-DDTHH:MM:SSZ" (and "YYYY-MM-DD" as midnight).
std::optional<SimInstant> parse_iso8601(std::string_view text);

/// "YYYY-MM-DD" of the UTC day containing t.
std::string format_date(SimInstant t);

/// Whole seconds since the Unix epoch (floor).
std::int64_t epoch_seconds(SimInstant t);
SimInstant from_epoch_seconds(std::int64_t s);

/// Hour of day 0..23 in UTC.
int hour_of_day(SimInstant t);

/// Offset since the start of the UTC day.
SimDuration time_of_day(SimInstant t);

}  // namespace roomsense
