#pragma once

#include <string>

#include "roomsense/core/time.hpp"

namespace roomsense::analytics {

/// Occupant comfort vote: -1 too uncomfortable, 0 neutral, +1 comfortable.
struct FeedbackRecord {
  std::string room_id;
  int vote = 0;
  std::string note;
  SimInstant ts{};
};

inline bool is_valid(const FeedbackRecord& f) {
  return !f.room_id.empty() && f.vote >= -1 && f.vote <= 1;
}

}  // namespace roomsense::analytics
