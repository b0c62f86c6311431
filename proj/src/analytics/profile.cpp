#include "roomsense/analytics/profile.hpp"

#include <stdexcept>

namespace roomsense::analytics {

double smooth(double s, double x, double alpha) { return alpha * x + (1.0 - alpha) * s; }

HourlyProfile::HourlyProfile(double alpha) : alpha_(alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("smoothing factor must lie in (0,1)");
}

HourlyProfile::HourlyProfile(const HourlyProfile& other) : alpha_(other.alpha_) {
  std::lock_guard lock(other.mu_);
  slots_ = other.slots_;
}

void HourlyProfile::update(const Reading& r) {
  std::lock_guard lock(mu_);
  auto& slot = slots_[Key{r.room_id, r.metric, hour_of_day(r.timestamp)}];
  slot.s = slot.count == 0 ? r.value : smooth(slot.s, r.value, alpha_);
  ++slot.count;
}

std::optional<ProfileSlot> HourlyProfile::slot(const std::string& room_id, Metric metric, int hour) const {
  std::lock_guard lock(mu_);
  auto it = slots_.find(Key{room_id, metric, hour});
  if (it == slots_.end() || it->second.count == 0) return std::nullopt;
  return it->second;
}

std::optional<double> HourlyProfile::predict(const std::string& room_id, Metric metric, int hour) const {
  if (auto s = slot(room_id, metric, hour)) return s->s;
  return std::nullopt;
}

std::map<HourlyProfile::Key, ProfileSlot> HourlyProfile::snapshot() const {
  std::lock_guard lock(mu_);
  return slots_;
}

}  // namespace roomsense::analytics
