#include "roomsense/gateway/registry.hpp"

#include <algorithm>
#include <tuple>

#include <spdlog/spdlog.h>

#include "roomsense/protosim/codec.hpp"

namespace roomsense::gateway {

std::string_view liveness_name(Liveness l) {
  switch (l) {
    case Liveness::online: return "online";
    case Liveness::stale: return "stale";
    case Liveness::offline: return "offline";
  }
  return "";
}

std::string_view registry_error_name(RegistryError e) {
  switch (e) {
    case RegistryError::duplicate_id: return "DUPLICATE_ID";
    case RegistryError::unsupported_protocol: return "UNSUPPORTED_PROTOCOL";
    case RegistryError::invalid_descriptor: return "INVALID_DESCRIPTOR";
  }
  return "";
}

std::string_view poll_fault_name(PollFault f) {
  switch (f) {
    case PollFault::timeout: return "TIMEOUT";
    case PollFault::bad_crc: return "BAD_CRC";
    case PollFault::unknown_char: return "UNKNOWN_CHAR";
    case PollFault::bad_frame: return "BAD_FRAME";
  }
  return "";
}

Liveness liveness_at(SimInstant last_seen, SimDuration base, SimInstant now) {
  const SimDuration age = now - last_seen;
  if (age <= 2 * base) return Liveness::online;
  if (age <= 5 * base) return Liveness::stale;
  return Liveness::offline;
}

SimDuration DeviceEntry::liveness_base() const {
  if (descriptor.protocol == Protocol::ble_sim) return descriptor.poll_interval.value_or(kDefaultPollInterval);
  return kPushLivenessBase;
}

Liveness DeviceEntry::liveness(SimInstant now) const {
  if (suspended) return Liveness::offline;
  return liveness_at(last_seen.value_or(registered_at), liveness_base(), now);
}

Registry::Registry(std::set<Protocol> supported) : supported_(std::move(supported)) {}

std::optional<RegistryError> Registry::add(const DeviceDescriptor& d, std::optional<net::Endpoint> endpoint,
                                           SimInstant now) {
  if (!validate_descriptor(d).empty()) return RegistryError::invalid_descriptor;
  if (!supported_.count(d.protocol)) return RegistryError::unsupported_protocol;
  std::lock_guard lock(mu_);
  if (devices_.count(d.device_id)) return RegistryError::duplicate_id;
  DeviceEntry e;
  e.descriptor = d;
  e.endpoint = std::move(endpoint);
  e.registered_at = now;
  devices_.emplace(d.device_id, std::move(e));
  return std::nullopt;
}

std::optional<DeviceEntry> Registry::get(const std::string& device_id) const {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return std::nullopt;
  return it->second;
}

std::vector<DeviceEntry> Registry::list() const {
  std::lock_guard lock(mu_);
  std::vector<DeviceEntry> out;
  for (const auto& [id, e] : devices_) out.push_back(e);
  return out;
}

std::optional<std::string> Registry::by_zwave(std::uint8_t node) const {
  std::lock_guard lock(mu_);
  for (const auto& [id, e] : devices_) {
    const auto* z = std::get_if<ZwaveNodeId>(&e.descriptor.address);
    if (e.descriptor.protocol == Protocol::zwave_sim && z && z->value == node) return id;
  }
  return std::nullopt;
}

std::optional<std::string> Registry::by_mesh(std::uint16_t node) const {
  std::lock_guard lock(mu_);
  for (const auto& [id, e] : devices_) {
    const auto* m = std::get_if<MeshNodeId>(&e.descriptor.address);
    if (e.descriptor.protocol == Protocol::zigbee_sim && m && m->value == node) return id;
  }
  return std::nullopt;
}

std::set<std::string> Registry::rooms() const {
  std::lock_guard lock(mu_);
  std::set<std::string> out;
  for (const auto& [id, e] : devices_) out.insert(e.descriptor.room_id);
  return out;
}

void Registry::mark_seen(const std::string& device_id, SimInstant now) {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return;
  if (!it->second.last_seen || *it->second.last_seen < now) it->second.last_seen = now;
  it->second.consecutive_faults = 0;
}

bool Registry::record_fault(const std::string& device_id, PollFault f) {
  std::lock_guard lock(mu_);
  auto it = devices_.find(device_id);
  if (it == devices_.end()) return false;
  auto& e = it->second;
  ++e.faults[f];
  if (++e.consecutive_faults >= kFaultLimit && !e.suspended) {
    e.suspended = true;
    spdlog::error("device '{}': {} consecutive faults, now offline; polling suspended", device_id,
                  e.consecutive_faults);
    return true;
  }
  return false;
}

namespace {

auto job_key(const PollJob& j) { return std::tie(j.next_due, j.device_id, j.kind, j.char_id); }

}  // namespace

void Scheduler::add(PollJob job) {
  jobs_.push_back(std::move(job));
  std::sort(jobs_.begin(), jobs_.end(), [](const auto& a, const auto& b) { return job_key(a) < job_key(b); });
}

std::vector<PollJob> Scheduler::take_due(SimInstant now) {
  std::vector<PollJob> due;
  for (auto& j : jobs_) {
    if (j.next_due > now) continue;
    due.push_back(j);
    j.next_due += j.interval;
    while (j.next_due <= now) {
      j.next_due += j.interval;
      ++skipped_;
    }
  }
  std::sort(due.begin(), due.end(), [](const auto& a, const auto& b) { return job_key(a) < job_key(b); });
  std::sort(jobs_.begin(), jobs_.end(), [](const auto& a, const auto& b) { return job_key(a) < job_key(b); });
  return due;
}

std::optional<SimInstant> Scheduler::next_due() const {
  if (jobs_.empty()) return std::nullopt;
  return jobs_.front().next_due;
}

}  // namespace roomsense::gateway
