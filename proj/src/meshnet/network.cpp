#include "roomsense/meshnet/network.hpp"

#include <stdexcept>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

namespace roomsense::meshnet {

std::string_view mesh_error_name(MeshError e) {
  switch (e) {
    case MeshError::no_route: return "NO_ROUTE";
    case MeshError::dropped_ttl: return "DROPPED_TTL";
    case MeshError::dropped_loss: return "DROPPED_LOSS";
  }
  return "";
}

// ---------------------------------------------------------------------------
// RouteTable

std::optional<RouteEntry> RouteTable::lookup(NodeId dest, SimInstant now, SimDuration ttl) const {
  auto it = entries_.find(dest);
  if (it == entries_.end() || now - it->second.learned_at >= ttl) return std::nullopt;
  return it->second;
}

void RouteTable::learn(NodeId dest, RouteEntry entry, SimDuration ttl) {
  auto it = entries_.find(dest);
  if (it == entries_.end() || entry.learned_at - it->second.learned_at >= ttl ||
      entry.hop_count < it->second.hop_count) {
    entries_[dest] = entry;
  } else if (entry.hop_count == it->second.hop_count) {
    it->second.learned_at = entry.learned_at;
  }
}

// ---------------------------------------------------------------------------
// MeshNetwork

bool MeshNetwork::Later::operator()(const Event& a, const Event& b) const {
  if (a.at != b.at) return a.at > b.at;
  if (a.hop_key != b.hop_key) return a.hop_key > b.hop_key;
  if (a.sender != b.sender) return a.sender > b.sender;
  return a.order > b.order;
}

MeshNetwork::MeshNetwork(Topology topology, MeshConfig cfg, SimInstant start)
    : topology_(std::move(topology)), cfg_(cfg), now_(start), rng_(cfg.seed) {
  for (NodeId n : topology_.nodes()) nodes_[n];
}

void MeshNetwork::require_node(NodeId n) const {
  if (!topology_.has_node(n)) throw std::invalid_argument(fmt::format("unknown mesh node {}", n));
}

const RouteTable& MeshNetwork::routes(NodeId node) const {
  require_node(node);
  return nodes_.at(node).routes;
}

Freshness MeshNetwork::dedupe_seen(NodeId node, NodeId src, std::uint8_t seq) {
  auto& seen = nodes_[node].seen;
  const auto key = std::make_pair(src, seq);
  auto it = seen.find(key);
  if (it != seen.end() && now_ - it->second < cfg_.dedupe_window) return Freshness::duplicate;
  seen[key] = now_;
  return Freshness::fresh;
}

void MeshNetwork::schedule(Event ev) {
  ev.order = next_order_++;
  queue_.push(std::move(ev));
}

bool MeshNetwork::lost(const LinkParams& link) {
  if (link.loss <= 0.0) return false;
  if (link.loss >= 1.0) return true;
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng_) < link.loss;
}

void MeshNetwork::broadcast(NodeId from, const MeshFrame& f) {
  const Bytes wire = encode_mesh(f);
  for (NodeId to : topology_.neighbors(from)) {
    ++stats_.rreq_tx;
    const LinkParams& link = topology_.link(from, to);
    if (lost(link)) {
      ++stats_.lost_tx;
      continue;
    }
    Event ev;
    ev.at = now_ + link.latency;
    ev.hop_key = f.hops;
    ev.sender = from;
    ev.node = to;
    ev.wire = wire;
    schedule(std::move(ev));
  }
}

bool MeshNetwork::unicast(NodeId from, NodeId to, const MeshFrame& f, Ticket ticket,
                          std::shared_ptr<std::set<NodeId>> visited) {
  const LinkParams& link = topology_.link(from, to);
  auto& counter = f.type == FrameType::data ? stats_.data_tx : stats_.rrep_tx;
  for (int attempt = 0; attempt <= cfg_.retries; ++attempt) {
    ++counter;
    if (lost(link)) {
      ++stats_.lost_tx;
      continue;
    }
    Event ev;
    ev.at = now_ + link.latency * (attempt + 1);
    ev.hop_key = f.hops;
    ev.sender = from;
    ev.node = to;
    ev.wire = encode_mesh(f);
    ev.ticket = ticket;
    ev.visited = std::move(visited);
    schedule(std::move(ev));
    return true;
  }
  return false;
}

MeshNetwork::Discovery& MeshNetwork::start_discovery(NodeId origin, NodeId target) {
  auto& state = nodes_[origin];
  Discovery& d = discoveries_[{origin, target}];
  d.seq = state.next_seq++;
  dedupe_seen(origin, origin, d.seq);

  MeshFrame rreq{FrameType::rreq, origin, target, d.seq,
                 static_cast<std::uint8_t>(cfg_.initial_ttl - 1), 1, {}};
  broadcast(origin, rreq);

  Event timeout;
  timeout.at = now_ + cfg_.discovery_timeout;
  timeout.kind = EventKind::discovery_timeout;
  timeout.node = origin;
  timeout.target = target;
  timeout.seq = d.seq;
  schedule(std::move(timeout));
  return d;
}

RouteOutcome MeshNetwork::discover_route(NodeId origin, NodeId target) {
  require_node(origin);
  require_node(target);
  if (origin == target) return Route{origin, 0};

  const std::uint8_t seq = start_discovery(origin, target).seq;
  for (;;) {
    auto it = discoveries_.find({origin, target});
    if (it == discoveries_.end() || it->second.seq != seq) break;  // resolved or failed
    if (!step()) break;
  }
  prune();
  if (auto r = nodes_[origin].routes.lookup(target, now_, cfg_.route_ttl))
    return Route{r->next_hop, r->hop_count};
  return MeshError::no_route;
}

Ticket MeshNetwork::submit(NodeId origin, NodeId target, std::span<const std::uint8_t> payload) {
  require_node(origin);
  require_node(target);
  if (payload.size() > kMaxPayload) throw std::invalid_argument("mesh payload exceeds 64 bytes");
  const Ticket ticket = next_ticket_++;
  tickets_[ticket] = std::nullopt;
  Bytes data(payload.begin(), payload.end());

  if (origin == target) {
    resolve(ticket, Delivery{0, now_});
    if (on_delivery_) on_delivery_(origin, target, data, now_);
    return ticket;
  }
  if (nodes_[origin].routes.lookup(target, now_, cfg_.route_ttl)) {
    send_from_origin(origin, target, ticket, data);
    return ticket;
  }
  auto it = discoveries_.find({origin, target});
  Discovery& d = it != discoveries_.end() ? it->second : start_discovery(origin, target);
  d.pending.emplace_back(ticket, std::move(data));
  return ticket;
}

DeliveryOutcome MeshNetwork::send_data(NodeId origin, NodeId target,
                                       std::span<const std::uint8_t> payload) {
  const Ticket t = submit(origin, target, payload);
  while (!tickets_.at(t) && step()) {
  }
  prune();
  const auto outcome = tickets_.at(t);
  return outcome ? *outcome : DeliveryOutcome{MeshError::no_route};
}

std::optional<DeliveryOutcome> MeshNetwork::poll(Ticket t) const {
  auto it = tickets_.find(t);
  if (it == tickets_.end()) return std::nullopt;
  return it->second;
}

Ticket MeshNetwork::inject(NodeId at, NodeId from, const MeshFrame& frame) {
  require_node(at);
  Event ev;
  ev.at = now_;
  ev.hop_key = frame.hops;
  ev.sender = from;
  ev.node = at;
  ev.wire = encode_mesh(frame);
  if (frame.type == FrameType::data) {
    ev.ticket = next_ticket_++;
    tickets_[ev.ticket] = std::nullopt;
    ev.visited = std::make_shared<std::set<NodeId>>();
  }
  const Ticket t = ev.ticket;
  schedule(std::move(ev));
  return t;
}

void MeshNetwork::send_from_origin(NodeId origin, NodeId target, Ticket ticket, const Bytes& payload) {
  const auto route = nodes_[origin].routes.lookup(target, now_, cfg_.route_ttl);
  if (!route) {
    resolve(ticket, MeshError::no_route);
    return;
  }
  MeshFrame f{FrameType::data, origin, target, nodes_[origin].next_seq++,
              static_cast<std::uint8_t>(cfg_.initial_ttl - 1), 1, payload};
  auto visited = std::make_shared<std::set<NodeId>>(std::set<NodeId>{origin});
  if (!unicast(origin, route->next_hop, f, ticket, std::move(visited)))
    resolve(ticket, MeshError::dropped_loss);
}

void MeshNetwork::resolve(Ticket t, DeliveryOutcome outcome) {
  auto it = tickets_.find(t);
  if (it != tickets_.end() && !it->second) it->second = outcome;
}

std::optional<SimInstant> MeshNetwork::next_event() const {
  if (queue_.empty()) return std::nullopt;
  return queue_.top().at;
}

void MeshNetwork::prune() {
  // Drop timeouts of discoveries that already finished so they neither advance the
  // clock nor show up in next_event().
  while (!queue_.empty() && queue_.top().kind == EventKind::discovery_timeout) {
    const Event& top = queue_.top();
    auto it = discoveries_.find({top.node, top.target});
    if (it != discoveries_.end() && it->second.seq == top.seq) break;
    queue_.pop();
  }
}

bool MeshNetwork::step() {
  prune();
  if (queue_.empty()) return false;
  Event ev = queue_.top();
  queue_.pop();
  if (ev.at > now_) now_ = ev.at;
  handle(ev);
  prune();
  return true;
}

void MeshNetwork::advance_to(SimInstant t) {
  prune();
  while (!queue_.empty() && queue_.top().at <= t) step();
  if (t > now_) now_ = t;
}

void MeshNetwork::run_until_idle() {
  while (step()) {
  }
}

void MeshNetwork::handle(Event& ev) {
  if (ev.kind == EventKind::discovery_timeout) {
    handle_timeout(ev.node, ev.target, ev.seq);
    return;
  }
  const auto decoded = decode_mesh(ev.wire);
  const auto* f = std::get_if<MeshFrame>(&decoded);
  if (!f) {
    spdlog::warn("mesh node {}: undecodable frame", ev.node);
    return;
  }
  switch (f->type) {
    case FrameType::rreq: handle_rreq(ev.node, ev.sender, *f); break;
    case FrameType::rrep: handle_rrep(ev.node, ev.sender, *f); break;
    case FrameType::data: handle_data(ev.node, *f, ev.ticket, std::move(ev.visited)); break;
  }
}

void MeshNetwork::handle_rreq(NodeId node, NodeId sender, const MeshFrame& f) {
  const NodeId origin = f.src;
  const NodeId target = f.dst;
  if (node == origin) return;
  const bool fresh = dedupe_seen(node, origin, f.seq) == Freshness::fresh;
  nodes_[node].routes.learn(origin, RouteEntry{sender, f.hops, now_}, cfg_.route_ttl);

  if (node == target) {
    // Answer the first copy, and any later copy that arrived over fewer hops.
    auto [it, inserted] = target_best_.try_emplace({origin, target, f.seq}, BestReply{f.hops, now_});
    if (!inserted) {
      if (now_ - it->second.at < cfg_.dedupe_window && f.hops >= it->second.hops) return;
      it->second = {f.hops, now_};
    }
    MeshFrame rrep{FrameType::rrep, target, origin, f.seq,
                   static_cast<std::uint8_t>(cfg_.initial_ttl - 1), 1, {}};
    unicast(node, sender, rrep, 0, nullptr);
    return;
  }
  if (!fresh || f.ttl == 0) return;
  MeshFrame fwd = f;
  fwd.ttl = static_cast<std::uint8_t>(f.ttl - 1);
  fwd.hops = static_cast<std::uint8_t>(f.hops + 1);
  broadcast(node, fwd);
}

void MeshNetwork::handle_rrep(NodeId node, NodeId sender, const MeshFrame& f) {
  const NodeId target = f.src;
  const NodeId origin = f.dst;
  nodes_[node].routes.learn(target, RouteEntry{sender, f.hops, now_}, cfg_.route_ttl);

  if (node == origin) {
    auto it = discoveries_.find({origin, target});
    if (it == discoveries_.end()) return;
    auto pending = std::move(it->second.pending);
    discoveries_.erase(it);
    for (auto& [ticket, payload] : pending) send_from_origin(origin, target, ticket, payload);
    return;
  }
  const auto back = nodes_[node].routes.lookup(origin, now_, cfg_.route_ttl);
  if (!back || f.ttl == 0) return;
  MeshFrame fwd = f;
  fwd.ttl = static_cast<std::uint8_t>(f.ttl - 1);
  fwd.hops = static_cast<std::uint8_t>(f.hops + 1);
  unicast(node, back->next_hop, fwd, 0, nullptr);
}

void MeshNetwork::handle_data(NodeId node, const MeshFrame& f, Ticket ticket,
                              std::shared_ptr<std::set<NodeId>> visited) {
  if (visited && !visited->insert(node).second) {
    ++stats_.loops_detected;
    spdlog::error("mesh loop: frame {}->{} revisited node {}", f.src, f.dst, node);
    resolve(ticket, MeshError::no_route);
    return;
  }
  if (node == f.dst) {
    resolve(ticket, Delivery{f.hops, now_});
    if (on_delivery_) on_delivery_(f.src, f.dst, f.payload, now_);
    return;
  }
  if (f.ttl == 0) {
    resolve(ticket, MeshError::dropped_ttl);
    return;
  }
  const auto route = nodes_[node].routes.lookup(f.dst, now_, cfg_.route_ttl);
  if (!route) {
    resolve(ticket, MeshError::no_route);
    return;
  }
  // Forwarding keeps the route alive; otherwise a hop that learned it slightly
  // before the origin expires first and drops traffic the origin still routes.
  nodes_[node].routes.learn(f.dst, {route->next_hop, route->hop_count, now_}, cfg_.route_ttl);
  MeshFrame fwd = f;
  fwd.ttl = static_cast<std::uint8_t>(f.ttl - 1);
  fwd.hops = static_cast<std::uint8_t>(f.hops + 1);
  if (!unicast(node, route->next_hop, fwd, ticket, std::move(visited)))
    resolve(ticket, MeshError::dropped_loss);
}

void MeshNetwork::handle_timeout(NodeId origin, NodeId target, std::uint8_t seq) {
  auto it = discoveries_.find({origin, target});
  if (it == discoveries_.end() || it->second.seq != seq) return;
  spdlog::debug("mesh discovery {}->{} timed out", origin, target);
  auto pending = std::move(it->second.pending);
  discoveries_.erase(it);
  for (auto& [ticket, payload] : pending) resolve(ticket, MeshError::no_route);
}

}  // namespace roomsense::meshnet
