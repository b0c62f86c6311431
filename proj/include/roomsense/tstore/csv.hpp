#pragma once

#include <optional>
#include <string>
#include <string_view>

#include "roomsense/core/reading.hpp"

namespace roomsense::tstore {

inline constexpr std::string_view kHeader = "timestamp,device_id,metric,value,unit";

/// Exactly two fraction digits, computed from the x100 integer so the text is
/// lossless with respect to the wire encoding ("-0.00" never appears).
std::string format_value(double v);

/// One LF-terminated row. The timestamp is written at whole-second precision.
std::string format_row(const Reading& r);

/// Parses a row without its terminator. room_id is left empty since rows do not
/// carry it. Rejects wrong column counts, unknown metrics, unit mismatches and
/// values without exactly two fraction digits.
std::optional<Reading> parse_row(std::string_view line);

/// True if `id` can be used as a directory name and a CSV field.
bool is_storable_id(std::string_view id);

}  // namespace roomsense::tstore
