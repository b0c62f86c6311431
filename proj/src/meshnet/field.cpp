#include "roomsense/meshnet/field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <spdlog/spdlog.h>

namespace roomsense::meshnet {

SensorField::SensorField(MeshNetwork& mesh, NodeId sink, std::vector<SensorSource> sources, SimInstant start)
    : mesh_(mesh), sink_(sink), sources_(std::move(sources)) {
  if (!mesh_.topology().has_node(sink_)) throw std::invalid_argument("sink is not a mesh node");
  for (const auto& s : sources_) {
    if (!mesh_.topology().has_node(s.node))
      throw std::invalid_argument("sensor node " + std::to_string(s.node) + " is not a mesh node");
    if (s.report_interval <= SimDuration::zero()) throw std::invalid_argument("report interval must be positive");
    next_report_.push_back(start);
  }
  mesh_.on_delivery([this](NodeId src, NodeId dst, const std::vector<std::uint8_t>& payload, SimInstant at) {
    if (dst != sink_) return;
    auto p = decode_sensor_payload(payload);
    if (!p) {
      spdlog::warn("mesh sink: undecodable payload from node {:#06x}", src);
      return;
    }
    ++delivered_;
    if (on_sink_) on_sink_(src, *p, at);
  });
}

std::optional<SimInstant> SensorField::next_event() const {
  std::optional<SimInstant> t = mesh_.next_event();
  for (const auto& r : next_report_)
    if (!t || r < *t) t = r;
  return t;
}

void SensorField::emit_due(SimInstant t) {
  for (std::size_t i = 0; i < sources_.size(); ++i) {
    if (next_report_[i] != t) continue;
    const auto& s = sources_[i];
    for (const auto& [metric, model] : s.signals) {
      SensorPayload p;
      p.metric = metric;
      p.raw_value = static_cast<std::int32_t>(std::llround(model.sample(metric, t) * 100.0));
      p.ts = static_cast<std::uint32_t>(epoch_seconds(t));
      const auto bytes = encode_sensor_payload(p);
      tickets_.push_back(mesh_.submit(s.node, sink_, bytes));
      ++reports_;
    }
    next_report_[i] += s.report_interval;
  }
}

void SensorField::advance_to(SimInstant t) {
  for (;;) {
    auto due = std::min_element(next_report_.begin(), next_report_.end());
    if (due == next_report_.end() || *due > t) break;
    const SimInstant at = *due;
    mesh_.advance_to(at);
    emit_due(at);
  }
  mesh_.advance_to(t);
}

std::uint64_t SensorField::failed() const {
  std::uint64_t n = 0;
  for (Ticket tk : tickets_) {
    auto o = mesh_.poll(tk);
    if (o && std::holds_alternative<MeshError>(*o)) ++n;
  }
  return n;
}

}  // namespace roomsense::meshnet
