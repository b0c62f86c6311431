#include "roomsense/protosim/sim_device.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

namespace roomsense::protosim {

namespace {

std::uint64_t mix(std::uint64_t x) {
  // splitmix64 finalizer
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

}  // namespace

double SignalModel::sample(Metric metric, SimInstant t) const {
  const double period_ms = static_cast<double>(period.count());
  const double since = static_cast<double>((t - peak_offset).time_since_epoch().count());
  const double phase = 2.0 * std::numbers::pi * std::fmod(since, period_ms) / period_ms;
  double v = baseline + amplitude * std::cos(phase);
  if (noise_sigma > 0.0) {
    const auto sec = static_cast<std::uint64_t>(epoch_seconds(t));
    std::mt19937_64 rng(mix(seed ^ mix(static_cast<std::uint64_t>(metric) + 1) ^ mix(sec)));
    std::normal_distribution<double> noise(0.0, noise_sigma);
    v += noise(rng);
  }
  if (min) v = std::max(v, *min);
  if (max) v = std::min(v, *max);
  return v;
}

std::vector<MacAddress> SimDeviceConfig::nearby_at(SimInstant t) const {
  const ScanEntry* current = nullptr;
  for (const auto& e : scan_script)
    if (e.from <= t) current = &e;
  return current ? current->macs : std::vector<MacAddress>{};
}

}  // namespace roomsense::protosim
