#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <utility>

#include "roomsense/core/time.hpp"

namespace roomsense::meshnet {

using NodeId = std::uint16_t;

struct LinkParams {
  double loss = 0.0;  // probability in [0,1] that one transmission is lost
  SimDuration latency{0};
};

/// Undirected, loop-free mesh graph with per-link loss and latency.
class Topology {
 public:
  void add_node(NodeId id);
  /// Throws std::invalid_argument for self-loops, unknown nodes, or loss outside [0,1].
  void add_link(NodeId a, NodeId b, LinkParams params = {});

  bool has_node(NodeId id) const { return adjacency_.count(id) != 0; }
  const std::set<NodeId>& neighbors(NodeId id) const;
  const LinkParams& link(NodeId a, NodeId b) const;
  bool linked(NodeId a, NodeId b) const;

  /// Replaces the loss probability on every link.
  void set_uniform_loss(double loss);

  std::set<NodeId> nodes() const;
  std::size_t edge_count() const { return links_.size(); }
  bool connected() const;

 private:
  static std::pair<NodeId, NodeId> key(NodeId a, NodeId b) { return std::minmax(a, b); }

  std::map<NodeId, std::set<NodeId>> adjacency_;
  std::map<std::pair<NodeId, NodeId>, LinkParams> links_;
};

}  // namespace roomsense::meshnet
