#include "roomsense/meshnet/topology.hpp"

#include <deque>
#include <stdexcept>

#include <fmt/format.h>

namespace roomsense::meshnet {

void Topology::add_node(NodeId id) { adjacency_[id]; }

void Topology::add_link(NodeId a, NodeId b, LinkParams params) {
  if (a == b) throw std::invalid_argument(fmt::format("self-loop on node {}", a));
  if (!has_node(a) || !has_node(b))
    throw std::invalid_argument(fmt::format("link {}-{} names an unknown node", a, b));
  if (!(params.loss >= 0.0 && params.loss <= 1.0))
    throw std::invalid_argument("link loss must lie in [0,1]");
  if (params.latency < SimDuration::zero()) throw std::invalid_argument("negative link latency");
  adjacency_[a].insert(b);
  adjacency_[b].insert(a);
  links_[key(a, b)] = params;
}

const std::set<NodeId>& Topology::neighbors(NodeId id) const {
  static const std::set<NodeId> none;
  auto it = adjacency_.find(id);
  return it == adjacency_.end() ? none : it->second;
}

const LinkParams& Topology::link(NodeId a, NodeId b) const {
  auto it = links_.find(key(a, b));
  if (it == links_.end()) throw std::out_of_range(fmt::format("no link {}-{}", a, b));
  return it->second;
}

bool Topology::linked(NodeId a, NodeId b) const { return links_.count(key(a, b)) != 0; }

void Topology::set_uniform_loss(double loss) {
  for (auto& [k, params] : links_) params.loss = loss;
}

std::set<NodeId> Topology::nodes() const {
  std::set<NodeId> out;
  for (const auto& [id, adj] : adjacency_) out.insert(id);
  return out;
}

bool Topology::connected() const {
  if (adjacency_.empty()) return true;
  std::set<NodeId> seen{adjacency_.begin()->first};
  std::deque<NodeId> queue{adjacency_.begin()->first};
  while (!queue.empty()) {
    const NodeId u = queue.front();
    queue.pop_front();
    for (NodeId v : neighbors(u))
      if (seen.insert(v).second) queue.push_back(v);
  }
  return seen.size() == adjacency_.size();
}

}  // namespace roomsense::meshnet
