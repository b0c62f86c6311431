#pragma once

#include <functional>
#include <map>
#include <string>
#include <vector>

#include "roomsense/meshnet/network.hpp"
#include "roomsense/protosim/sim_device.hpp"

namespace roomsense::meshnet {

/// A zigbee_sim sensor node reporting every `report_interval`.
struct SensorSource {
  NodeId node = 0;
  std::map<Metric, protosim::SignalModel> signals;
  SimDuration report_interval = sim_seconds(60);
};

/// Sensor nodes generating samples on a schedule and routing them to one sink over
/// the mesh. Reports start at `start` and repeat at a fixed rate. Driven from a
/// single activity, like the network itself.
class SensorField {
 public:
  using SinkHandler = std::function<void(NodeId src, const SensorPayload& p, SimInstant at)>;

  /// Throws std::invalid_argument when a source or the sink is not in the topology.
  SensorField(MeshNetwork& mesh, NodeId sink, std::vector<SensorSource> sources, SimInstant start);

  void on_sink(SinkHandler h) { on_sink_ = std::move(h); }

  /// Earliest pending report or mesh event.
  std::optional<SimInstant> next_event() const;
  /// Runs reports and mesh events in time order up to and including `t`.
  void advance_to(SimInstant t);

  std::uint64_t reports() const { return reports_; }
  std::uint64_t delivered() const { return delivered_; }
  /// Reports whose delivery failed (NO_ROUTE, DROPPED_*), counted once resolved.
  std::uint64_t failed() const;

 private:
  void emit_due(SimInstant t);

  MeshNetwork& mesh_;
  NodeId sink_;
  std::vector<SensorSource> sources_;
  std::vector<SimInstant> next_report_;
  SinkHandler on_sink_;
  std::vector<Ticket> tickets_;
  std::uint64_t reports_ = 0;
  std::uint64_t delivered_ = 0;
};

}  // namespace roomsense::meshnet
