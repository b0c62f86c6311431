#pragma once

#include <chrono>
#include <condition_variable>
#include <mutex>
#include <optional>
#include <set>
#include <stop_token>

#include "roomsense/core/time.hpp"

namespace roomsense {

/// Virtual clock running `compression` simulated seconds per wall second.
///
/// A free-running clock derives now() from the steady wall clock. A stepped
/// clock only moves through advance_to(); when paced it sleeps so that the
/// simulated elapsed time tracks compression * wall elapsed. Stepped clocks
/// also track the activities blocked in wait_until(), which lets a driver
/// advance straight to the next instant anyone cares about and detect when
/// every timed activity has caught up (see quiescent()).
///
/// Thread-safe; now() is monotone non-decreasing.
class SimClock {
 public:
  enum class Mode { free_running, stepped };

  SimClock(SimInstant epoch, double compression, Mode mode, bool paced = true);

  SimClock(const SimClock&) = delete;
  SimClock& operator=(const SimClock&) = delete;

  SimInstant now() const;
  SimInstant epoch() const { return epoch_; }
  double compression() const { return compression_; }
  Mode mode() const { return mode_; }

  /// Wall time needed for `d` of simulated time to pass.
  std::chrono::steady_clock::duration to_wall(SimDuration d) const;

  /// Stepped mode only. Earlier instants are ignored.
  void advance_to(SimInstant t);

  /// Blocks until now() >= t. Returns false if stopped first.
  bool wait_until(SimInstant t, std::stop_token stop = {});

  /// Registers a timed activity for quiescence tracking while alive.
  class Participation {
   public:
    explicit Participation(SimClock& clock);
    ~Participation();
    Participation(const Participation&) = delete;
    Participation& operator=(const Participation&) = delete;

   private:
    SimClock& clock_;
  };

  /// True when every participant is parked in wait_until().
  bool quiescent() const;
  /// Waits up to `timeout` (wall) for quiescent(); returns the final state.
  bool wait_quiescent(std::chrono::milliseconds timeout) const;

  /// Earliest instant some activity is waiting for.
  std::optional<SimInstant> next_wakeup() const;

 private:
  SimInstant free_now() const;

  const SimInstant epoch_;
  const double compression_;
  const Mode mode_;
  const bool paced_;
  const std::chrono::steady_clock::time_point wall_start_;

  mutable std::mutex mu_;
  mutable std::condition_variable_any cv_;
  SimInstant stepped_now_;
  std::multiset<SimInstant> waiters_;
  int participants_ = 0;
  int parked_participants_ = 0;
};

}  // namespace roomsense
