#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <queue>
#include <random>
#include <set>
#include <string_view>
#include <variant>
#include <vector>

#include "roomsense/meshnet/frame.hpp"
#include "roomsense/meshnet/topology.hpp"

namespace roomsense::meshnet {

struct MeshConfig {
  std::uint8_t initial_ttl = 8;
  SimDuration discovery_timeout = sim_seconds(5);
  SimDuration route_ttl = sim_seconds(300);
  SimDuration dedupe_window = sim_seconds(30);
  int retries = 3;  // per-hop retransmissions after the first attempt
  std::uint64_t seed = 1;
};

enum class MeshError { no_route, dropped_ttl, dropped_loss };
std::string_view mesh_error_name(MeshError e);

struct RouteEntry {
  NodeId next_hop = 0;
  int hop_count = 0;
  SimInstant learned_at{};
};

class RouteTable {
 public:
  /// Entries older than `ttl` are treated as absent.
  std::optional<RouteEntry> lookup(NodeId dest, SimInstant now, SimDuration ttl) const;
  /// Keeps the existing next hop unless the entry is absent, expired, or the new
  /// one is strictly shorter; an equal-length relearn only refreshes learned_at.
  void learn(NodeId dest, RouteEntry entry, SimDuration ttl);
  const std::map<NodeId, RouteEntry>& entries() const { return entries_; }

 private:
  std::map<NodeId, RouteEntry> entries_;
};

/// next_hop equals the origin itself for a local (self) route.
struct Route {
  NodeId next_hop = 0;
  int hop_count = 0;
};
using RouteOutcome = std::variant<Route, MeshError>;

struct Delivery {
  int hops = 0;
  SimInstant at{};
};
using DeliveryOutcome = std::variant<Delivery, MeshError>;

enum class Freshness { fresh, duplicate };

struct MeshStats {
  std::uint64_t rreq_tx = 0;  // per-link RREQ transmissions
  std::uint64_t rrep_tx = 0;
  std::uint64_t data_tx = 0;
  std::uint64_t lost_tx = 0;
  std::uint64_t loops_detected = 0;
};

using Ticket = std::uint64_t;

/// Single-threaded discrete-event mesh with AODV-style on-demand routing.
///
/// Route discovery floods an RREQ (dst = target) to every neighbour; each node
/// forwards a given (origin, seq) once and records the reverse route; the target
/// answers with a unicast RREP along the reverse path. Events at the same instant
/// are ordered by hop count and then by sender id, which makes the first RREQ copy
/// at every node a shortest one when latencies are zero.
///
/// Not thread-safe: callers drive it from one activity at a time.
class MeshNetwork {
 public:
  using DeliveryHandler =
      std::function<void(NodeId src, NodeId dst, const std::vector<std::uint8_t>& payload, SimInstant at)>;

  MeshNetwork(Topology topology, MeshConfig cfg, SimInstant start);

  SimInstant now() const { return now_; }
  const MeshConfig& config() const { return cfg_; }
  Topology& topology() { return topology_; }
  const Topology& topology() const { return topology_; }

  /// Runs a fresh discovery to completion. Throws std::invalid_argument for nodes
  /// outside the topology.
  RouteOutcome discover_route(NodeId origin, NodeId target);

  /// submit() and run until the outcome is known. Throws std::invalid_argument for
  /// payloads above 64 bytes or unknown nodes.
  DeliveryOutcome send_data(NodeId origin, NodeId target, std::span<const std::uint8_t> payload);

  Ticket submit(NodeId origin, NodeId target, std::span<const std::uint8_t> payload);
  /// Outcome once resolved; empty while in flight.
  std::optional<DeliveryOutcome> poll(Ticket t) const;

  /// Delivers `frame` to `at` as if transmitted by `from` at now(); DATA frames get a
  /// ticket whose outcome can be polled.
  Ticket inject(NodeId at, NodeId from, const MeshFrame& frame);

  std::optional<SimInstant> next_event() const;
  /// Processes one event. False when the queue is empty.
  bool step();
  /// Processes every event up to `t`, then sets now() to t.
  void advance_to(SimInstant t);
  void run_until_idle();

  /// RREQ flood suppression at `node`: the first (src, seq) in a 30 s window is fresh.
  Freshness dedupe_seen(NodeId node, NodeId src, std::uint8_t seq);

  const RouteTable& routes(NodeId node) const;
  const MeshStats& stats() const { return stats_; }
  void reset_stats() { stats_ = {}; }

  void on_delivery(DeliveryHandler h) { on_delivery_ = std::move(h); }

 private:
  enum class EventKind { receive, discovery_timeout };

  struct Event {
    SimInstant at;
    int hop_key = 0;
    NodeId sender = 0;
    std::uint64_t order = 0;
    EventKind kind = EventKind::receive;
    NodeId node = 0;  // receiver, or origin for timeouts
    NodeId target = 0;
    std::uint8_t seq = 0;
    Bytes wire;
    Ticket ticket = 0;
    std::shared_ptr<std::set<NodeId>> visited;
  };
  struct Later {
    bool operator()(const Event& a, const Event& b) const;
  };

  struct NodeState {
    RouteTable routes;
    std::map<std::pair<NodeId, std::uint8_t>, SimInstant> seen;
    std::uint8_t next_seq = 0;
  };

  struct Discovery {
    std::uint8_t seq = 0;
    std::vector<std::pair<Ticket, Bytes>> pending;
  };

  void require_node(NodeId n) const;
  Discovery& start_discovery(NodeId origin, NodeId target);
  void schedule(Event ev);
  bool lost(const LinkParams& link);
  void broadcast(NodeId from, const MeshFrame& f);
  bool unicast(NodeId from, NodeId to, const MeshFrame& f, Ticket ticket,
               std::shared_ptr<std::set<NodeId>> visited);
  void send_from_origin(NodeId origin, NodeId target, Ticket ticket, const Bytes& payload);
  void resolve(Ticket t, DeliveryOutcome outcome);
  void prune();

  void handle(Event& ev);
  void handle_rreq(NodeId node, NodeId sender, const MeshFrame& f);
  void handle_rrep(NodeId node, NodeId sender, const MeshFrame& f);
  void handle_data(NodeId node, const MeshFrame& f, Ticket ticket,
                   std::shared_ptr<std::set<NodeId>> visited);
  void handle_timeout(NodeId origin, NodeId target, std::uint8_t seq);

  Topology topology_;
  MeshConfig cfg_;
  SimInstant now_;
  std::mt19937_64 rng_;
  std::priority_queue<Event, std::vector<Event>, Later> queue_;
  std::uint64_t next_order_ = 0;
  std::map<NodeId, NodeState> nodes_;
  std::map<std::pair<NodeId, NodeId>, Discovery> discoveries_;
  struct BestReply {
    int hops = 0;
    SimInstant at{};
  };
  // Fewest hops answered per (origin, target, seq); sequence numbers wrap, so
  // entries lapse with the dedupe window.
  std::map<std::tuple<NodeId, NodeId, std::uint8_t>, BestReply> target_best_;
  std::map<Ticket, std::optional<DeliveryOutcome>> tickets_;
  Ticket next_ticket_ = 1;
  MeshStats stats_;
  DeliveryHandler on_delivery_;
};

}  // namespace roomsense::meshnet
