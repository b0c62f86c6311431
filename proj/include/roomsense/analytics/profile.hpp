#pragma once

#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <tuple>

#include "roomsense/core/reading.hpp"

namespace roomsense::analytics {

inline constexpr double kDefaultAlpha = 0.3;

struct ProfileSlot {
  double s = 0.0;
  std::size_t count = 0;

  friend bool operator==(const ProfileSlot&, const ProfileSlot&) = default;
};

/// Exponentially smoothed value per (room, metric, UTC hour of day). Thread-safe.
class HourlyProfile {
 public:
  using Key = std::tuple<std::string, Metric, int>;

  /// Throws std::invalid_argument unless 0 < alpha < 1.
  explicit HourlyProfile(double alpha = kDefaultAlpha);
  HourlyProfile(const HourlyProfile& other);

  double alpha() const { return alpha_; }

  /// First sample initializes the slot; later ones apply s = a*x + (1-a)*s.
  void update(const Reading& r);
  /// NO_MODEL is an empty optional.
  std::optional<double> predict(const std::string& room_id, Metric metric, int hour) const;
  std::optional<ProfileSlot> slot(const std::string& room_id, Metric metric, int hour) const;
  std::map<Key, ProfileSlot> snapshot() const;

 private:
  double alpha_;
  mutable std::mutex mu_;
  std::map<Key, ProfileSlot> slots_;
};

/// One smoothing step, exposed for property tests.
double smooth(double s, double x, double alpha);

}  // namespace roomsense::analytics
