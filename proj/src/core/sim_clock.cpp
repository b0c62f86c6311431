#include "roomsense/core/sim_clock.hpp"

#include <stdexcept>
#include <thread>

namespace roomsense {

namespace {
// Participation is per thread: the activity registers from the thread that waits.
thread_local const SimClock* t_participating = nullptr;
}  // namespace

SimClock::SimClock(SimInstant epoch, double compression, Mode mode, bool paced)
    : epoch_(epoch),
      compression_(compression),
      mode_(mode),
      paced_(paced),
      wall_start_(std::chrono::steady_clock::now()),
      stepped_now_(epoch) {
  if (!(compression > 0.0)) throw std::invalid_argument("compression must be positive");
}

SimInstant SimClock::free_now() const {
  const auto wall = std::chrono::steady_clock::now() - wall_start_;
  const auto sim = std::chrono::duration<double, std::milli>(wall) * compression_;
  return epoch_ + std::chrono::duration_cast<SimDuration>(sim);
}

SimInstant SimClock::now() const {
  if (mode_ == Mode::free_running) return free_now();
  std::lock_guard lock(mu_);
  return stepped_now_;
}

std::chrono::steady_clock::duration SimClock::to_wall(SimDuration d) const {
  const auto wall = std::chrono::duration<double, std::milli>(d) / compression_;
  return std::chrono::duration_cast<std::chrono::steady_clock::duration>(wall);
}

void SimClock::advance_to(SimInstant t) {
  if (mode_ != Mode::stepped) throw std::logic_error("advance_to on a free-running clock");
  if (paced_) {
    std::this_thread::sleep_until(wall_start_ + to_wall(t - epoch_));
  }
  {
    std::lock_guard lock(mu_);
    if (t <= stepped_now_) return;
    stepped_now_ = t;
  }
  cv_.notify_all();
}

bool SimClock::wait_until(SimInstant t, std::stop_token stop) {
  std::unique_lock lock(mu_);
  if (mode_ == Mode::free_running) {
    while (!stop.stop_requested()) {
      const SimInstant current = free_now();
      if (current >= t) return true;
      const auto deadline = std::chrono::steady_clock::now() + to_wall(t - current);
      cv_.wait_until(lock, stop, deadline, [] { return false; });
    }
    return false;
  }

  const bool participant = t_participating == this;
  const auto it = waiters_.insert(t);
  if (participant) ++parked_participants_;
  cv_.notify_all();
  const bool reached = cv_.wait(lock, stop, [&] { return stepped_now_ >= t; });
  waiters_.erase(it);
  if (participant) --parked_participants_;
  cv_.notify_all();
  return reached;
}

SimClock::Participation::Participation(SimClock& clock) : clock_(clock) {
  t_participating = &clock;
  {
    std::lock_guard lock(clock_.mu_);
    ++clock_.participants_;
  }
  clock_.cv_.notify_all();
}

SimClock::Participation::~Participation() {
  {
    std::lock_guard lock(clock_.mu_);
    --clock_.participants_;
  }
  t_participating = nullptr;
  clock_.cv_.notify_all();
}

bool SimClock::quiescent() const {
  std::lock_guard lock(mu_);
  return parked_participants_ >= participants_;
}

bool SimClock::wait_quiescent(std::chrono::milliseconds timeout) const {
  std::unique_lock lock(mu_);
  return cv_.wait_for(lock, timeout, [&] { return parked_participants_ >= participants_; });
}

std::optional<SimInstant> SimClock::next_wakeup() const {
  std::lock_guard lock(mu_);
  for (SimInstant t : waiters_)
    if (t > stepped_now_) return t;
  return std::nullopt;
}

}  // namespace roomsense
