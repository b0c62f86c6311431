#include <doctest.h>

#include <random>

#include "roomsense/meshnet/network.hpp"
#include "roomsense/protosim/fixed_point.hpp"
#include "support/generators.hpp"
#include "support/oracles.hpp"

using namespace roomsense;
using namespace roomsense::meshnet;
using namespace std::chrono_literals;

namespace {

const SimInstant t0 = *parse_iso8601("2024-01-01T00:00:00Z");

Topology line(int n, LinkParams params = {}) {
  Topology t;
  for (int i = 1; i <= n; ++i) t.add_node(static_cast<NodeId>(i));
  for (int i = 1; i < n; ++i) t.add_link(static_cast<NodeId>(i), static_cast<NodeId>(i + 1), params);
  return t;
}

Topology from_graph(const gen::Graph& g) {
  Topology t;
  for (int i = 1; i <= g.nodes; ++i) t.add_node(static_cast<NodeId>(i));
  for (auto [a, b] : g.edges) t.add_link(static_cast<NodeId>(a), static_cast<NodeId>(b));
  return t;
}

std::map<int, std::set<int>> adjacency(const gen::Graph& g) {
  std::map<int, std::set<int>> adj;
  for (int i = 1; i <= g.nodes; ++i) adj[i];
  for (auto [a, b] : g.edges) {
    adj[a].insert(b);
    adj[b].insert(a);
  }
  return adj;
}

const std::vector<std::uint8_t> payload{1, 2, 3};

}  // namespace

// ---------------------------------------------------------------------------
// frame codec

TEST_CASE("mesh frame layout") {
  MeshFrame f{FrameType::data, 0x0102, 0x0001, 7, 6, 2, {0xAA}};
  const Bytes wire = encode_mesh(f);
  REQUIRE(wire.size() == 12);
  CHECK(wire[0] == 0x5B);
  CHECK(wire[1] == 0x00);
  CHECK(wire[2] == 0x02);
  CHECK(wire[3] == 0x01);
  CHECK(wire[4] == 0x01);
  CHECK(wire[5] == 0x00);
  CHECK(wire[9] == 1);
  CHECK(wire[11] == oracle::xor_fold(std::span(wire).first(11)));
}

TEST_CASE("mesh frame round trip and corruption") {
  std::mt19937_64 rng(11);
  for (int i = 0; i < 2000; ++i) {
    MeshFrame f;
    f.type = static_cast<FrameType>(std::uniform_int_distribution<int>(0, 2)(rng));
    f.src = static_cast<std::uint16_t>(rng());
    f.dst = static_cast<std::uint16_t>(rng());
    f.seq = gen::byte(rng);
    f.ttl = gen::byte(rng);
    f.hops = gen::byte(rng);
    f.payload.resize(std::uniform_int_distribution<std::size_t>(0, kMaxPayload)(rng));
    for (auto& b : f.payload) b = gen::byte(rng);
    Bytes wire = encode_mesh(f);
    auto back = decode_mesh(wire);
    REQUIRE(std::holds_alternative<MeshFrame>(back));
    CHECK(std::get<MeshFrame>(back) == f);

    // any single payload-byte flip is caught by the checksum
    if (!f.payload.empty()) {
      const std::size_t at = 10 + std::uniform_int_distribution<std::size_t>(0, f.payload.size() - 1)(rng);
      wire[at] ^= static_cast<std::uint8_t>(1 + rng() % 255);
      auto bad = decode_mesh(wire);
      REQUIRE(std::holds_alternative<CodecError>(bad));
      CHECK(std::get<CodecError>(bad) == CodecError::bad_chk);
    }
  }
}

TEST_CASE("mesh frame errors") {
  CHECK(std::get<CodecError>(decode_mesh(Bytes{})) == CodecError::bad_length);
  Bytes wire = encode_mesh(MeshFrame{FrameType::rreq, 1, 2, 0, 7, 1, {}});
  Bytes bad = wire;
  bad[0] = 0x5A;
  CHECK(std::get<CodecError>(decode_mesh(bad)) == CodecError::bad_sof);
  bad = wire;
  bad[1] = 0x07;
  CHECK(std::get<CodecError>(decode_mesh(bad)) == CodecError::bad_sof);
  bad = wire;
  bad.pop_back();
  CHECK(std::get<CodecError>(decode_mesh(bad)) == CodecError::bad_length);
  bad = wire;
  bad[9] = 65;
  CHECK(std::get<CodecError>(decode_mesh(bad)) == CodecError::bad_length);
  bad = wire;
  bad.back() ^= 1;
  CHECK(std::get<CodecError>(decode_mesh(bad)) == CodecError::bad_chk);

  MeshFrame big;
  big.payload.assign(65, 0);
  CHECK_THROWS_AS(encode_mesh(big), protosim::EncodeError);
}

TEST_CASE("sensor payload round trip") {
  SensorPayload p{Metric::humidity, protosim::to_fixed_point(27.5), 1704067200};
  const Bytes wire = encode_sensor_payload(p);
  CHECK(wire.size() == 9);
  CHECK(wire[0] == static_cast<std::uint8_t>(Metric::humidity));
  auto back = decode_sensor_payload(wire);
  REQUIRE(back);
  CHECK(*back == p);
  CHECK(back->value() == doctest::Approx(27.5));
  CHECK_FALSE(decode_sensor_payload(Bytes{0xFF, 0, 0, 0, 0, 0, 0, 0, 0}));
  CHECK_FALSE(decode_sensor_payload(Bytes{0, 0}));
}

// ---------------------------------------------------------------------------
// topology

TEST_CASE("topology rejects malformed links") {
  Topology t;
  t.add_node(1);
  t.add_node(2);
  CHECK_THROWS_AS(t.add_link(1, 1), std::invalid_argument);
  CHECK_THROWS_AS(t.add_link(1, 3), std::invalid_argument);
  CHECK_THROWS_AS(t.add_link(1, 2, {1.5, {}}), std::invalid_argument);
  t.add_link(1, 2);
  CHECK(t.neighbors(2).count(1) == 1);
  CHECK(t.connected());
}

// ---------------------------------------------------------------------------
// discovery

TEST_CASE("line A-B-C routes via B") {
  MeshNetwork net(line(3), {}, t0);
  auto r = net.discover_route(1, 3);
  REQUIRE(std::holds_alternative<Route>(r));
  CHECK(std::get<Route>(r).next_hop == 2);
  CHECK(std::get<Route>(r).hop_count == 2);
  auto entry = net.routes(1).lookup(3, net.now(), 300s);
  REQUIRE(entry);
  CHECK(entry->next_hop == 2);
  // reverse route learned along the way
  REQUIRE(net.routes(3).lookup(1, net.now(), 300s));
  CHECK(net.routes(3).lookup(1, net.now(), 300s)->next_hop == 2);
}

TEST_CASE("self route sends nothing") {
  MeshNetwork net(line(3), {}, t0);
  auto r = net.discover_route(1, 1);
  REQUIRE(std::holds_alternative<Route>(r));
  CHECK(std::get<Route>(r).hop_count == 0);
  auto d = net.send_data(1, 1, payload);
  REQUIRE(std::holds_alternative<Delivery>(d));
  CHECK(std::get<Delivery>(d).hops == 0);
  CHECK(net.stats().rreq_tx == 0);
  CHECK(net.stats().data_tx == 0);
}

TEST_CASE("isolated origin gets NO_ROUTE after the discovery timeout") {
  Topology t = line(3);
  t.add_node(9);
  MeshNetwork net(t, {}, t0);
  auto r = net.discover_route(9, 1);
  REQUIRE(std::holds_alternative<MeshError>(r));
  CHECK(std::get<MeshError>(r) == MeshError::no_route);
  CHECK(net.now() == t0 + 5s);
  CHECK(std::get<MeshError>(net.send_data(9, 1, payload)) == MeshError::no_route);
}

TEST_CASE("unknown nodes are rejected") {
  MeshNetwork net(line(2), {}, t0);
  CHECK_THROWS_AS(net.discover_route(1, 42), std::invalid_argument);
  std::vector<std::uint8_t> big(65);
  CHECK_THROWS_AS(net.send_data(1, 2, big), std::invalid_argument);
}

TEST_CASE("routes expire after route_ttl") {
  MeshNetwork net(line(3), {}, t0);
  REQUIRE(std::holds_alternative<Route>(net.discover_route(1, 3)));
  CHECK(net.routes(1).lookup(3, t0 + 299s, 300s));
  CHECK_FALSE(net.routes(1).lookup(3, t0 + 300s, 300s));
}

TEST_CASE("latency prefers the earliest RREQ arrival") {
  // square 1-2-4 and 1-3-4 with a slow link on the 2 side
  Topology t;
  for (NodeId n : {1, 2, 3, 4}) t.add_node(n);
  t.add_link(1, 2, {0.0, 50ms});
  t.add_link(2, 4, {0.0, 50ms});
  t.add_link(1, 3, {0.0, 10ms});
  t.add_link(3, 4, {0.0, 10ms});
  MeshNetwork net(t, {}, t0);
  auto r = net.discover_route(1, 4);
  REQUIRE(std::holds_alternative<Route>(r));
  CHECK(std::get<Route>(r).next_hop == 3);
}

TEST_CASE("equal-hop ties go to the lowest neighbour id") {
  Topology t;
  for (NodeId n : {1, 5, 7, 9}) t.add_node(n);
  t.add_link(1, 7);
  t.add_link(1, 5);
  t.add_link(7, 9);
  t.add_link(5, 9);
  MeshNetwork net(t, {}, t0);
  auto r = net.discover_route(1, 9);
  REQUIRE(std::holds_alternative<Route>(r));
  CHECK(std::get<Route>(r).next_hop == 5);
}

TEST_CASE("minimal-hop optimality and bounded flooding on random topologies") {
  std::mt19937_64 rng(2024);
  for (int trial = 0; trial < 100; ++trial) {
    const gen::Graph g = gen::connected_graph(rng, 10);
    const auto adj = adjacency(g);
    std::uniform_int_distribution<int> node(1, g.nodes);
    const int origin = node(rng);
    int target = node(rng);
    if (target == origin) target = origin % g.nodes + 1;

    MeshNetwork net(from_graph(g), {}, t0);
    auto r = net.discover_route(static_cast<NodeId>(origin), static_cast<NodeId>(target));
    CAPTURE(trial);
    REQUIRE(std::holds_alternative<Route>(r));
    const int expected = oracle::bfs_hops(adj, origin).at(target);
    CHECK(std::get<Route>(r).hop_count == expected);
    CHECK(adj.at(origin).count(std::get<Route>(r).next_hop) == 1);
    CHECK(net.stats().rreq_tx <= 2 * g.edges.size());
    CHECK(net.stats().loops_detected == 0);

    auto d = net.send_data(static_cast<NodeId>(origin), static_cast<NodeId>(target), payload);
    REQUIRE(std::holds_alternative<Delivery>(d));
    CHECK(std::get<Delivery>(d).hops == expected);
  }
}

// ---------------------------------------------------------------------------
// data forwarding

TEST_CASE("A to C on a line is delivered over two hops") {
  MeshNetwork net(line(3), {}, t0);
  std::vector<std::uint8_t> got;
  NodeId got_src = 0;
  net.on_delivery([&](NodeId src, NodeId, const std::vector<std::uint8_t>& p, SimInstant) {
    got_src = src;
    got = p;
  });
  REQUIRE(std::holds_alternative<Route>(net.discover_route(1, 3)));
  auto d = net.send_data(1, 3, payload);
  REQUIRE(std::holds_alternative<Delivery>(d));
  CHECK(std::get<Delivery>(d).hops == 2);
  CHECK(got == payload);
  CHECK(got_src == 1);
}

TEST_CASE("send_data discovers on a route miss") {
  MeshNetwork net(line(4), {}, t0);
  auto d = net.send_data(1, 4, payload);
  REQUIRE(std::holds_alternative<Delivery>(d));
  CHECK(std::get<Delivery>(d).hops == 3);
  CHECK(net.stats().rreq_tx > 0);
}

TEST_CASE("frame injected with ttl 0 at a forwarder is dropped") {
  MeshNetwork net(line(3), {}, t0);
  REQUIRE(std::holds_alternative<Route>(net.discover_route(1, 3)));
  const Ticket t = net.inject(2, 1, MeshFrame{FrameType::data, 1, 3, 40, 0, 7, payload});
  net.run_until_idle();
  auto out = net.poll(t);
  REQUIRE(out);
  REQUIRE(std::holds_alternative<MeshError>(*out));
  CHECK(std::get<MeshError>(*out) == MeshError::dropped_ttl);
}

TEST_CASE("hops never exceed initial_ttl minus ttl") {
  MeshConfig cfg;
  cfg.initial_ttl = 3;
  MeshNetwork net(line(6), cfg, t0);
  // target is five hops away; the RREQ dies before reaching it
  CHECK(std::get<MeshError>(net.discover_route(1, 6)) == MeshError::no_route);
  auto ok = net.send_data(1, 4, payload);
  REQUIRE(std::holds_alternative<Delivery>(ok));
  CHECK(std::get<Delivery>(ok).hops == 3);
}

TEST_CASE("certain loss gives DROPPED_LOSS") {
  MeshNetwork net(line(3), {}, t0);
  REQUIRE(std::holds_alternative<Route>(net.discover_route(1, 3)));
  net.topology().set_uniform_loss(1.0);
  net.reset_stats();
  auto d = net.send_data(1, 3, payload);
  REQUIRE(std::holds_alternative<MeshError>(d));
  CHECK(std::get<MeshError>(d) == MeshError::dropped_loss);
  CHECK(net.stats().data_tx == 4);  // first attempt plus three retries
}

TEST_CASE("certain loss during discovery gives NO_ROUTE") {
  MeshNetwork net(line(3, {1.0, {}}), {}, t0);
  CHECK(std::get<MeshError>(net.discover_route(1, 3)) == MeshError::no_route);
}

TEST_CASE("delivery ratio under loss matches a direct Monte-Carlo of the model") {
  constexpr int kSends = 1000;
  MeshConfig cfg;
  cfg.seed = 99;
  MeshNetwork net(line(5), cfg, t0);
  REQUIRE(std::holds_alternative<Route>(net.discover_route(1, 5)));
  net.topology().set_uniform_loss(0.2);
  int delivered = 0;
  for (int i = 0; i < kSends; ++i)
    if (std::holds_alternative<Delivery>(net.send_data(1, 5, payload))) ++delivered;

  // oracle: four hops, each up to four Bernoulli(0.8) attempts
  std::mt19937 rng(7);
  std::bernoulli_distribution ok(0.8);
  constexpr int kTrials = 200000;
  int mc = 0;
  for (int i = 0; i < kTrials; ++i) {
    bool through = true;
    for (int hop = 0; hop < 4 && through; ++hop) {
      bool sent = false;
      for (int a = 0; a < 4 && !sent; ++a) sent = ok(rng);
      through = sent;
    }
    mc += through;
  }
  const double ratio = static_cast<double>(delivered) / kSends;
  const double expected = static_cast<double>(mc) / kTrials;
  CHECK(ratio == doctest::Approx(expected).epsilon(0.05));
  CHECK(net.stats().loops_detected == 0);
}

TEST_CASE("submit and poll drive several deliveries") {
  MeshNetwork net(line(4), {}, t0);
  const Ticket a = net.submit(4, 1, payload);
  const Ticket b = net.submit(3, 1, payload);
  CHECK_FALSE(net.poll(a));
  net.run_until_idle();
  REQUIRE(net.poll(a));
  REQUIRE(net.poll(b));
  CHECK(std::get<Delivery>(*net.poll(a)).hops == 3);
  CHECK(std::get<Delivery>(*net.poll(b)).hops == 2);
  CHECK_FALSE(net.next_event());
}

// ---------------------------------------------------------------------------
// dedupe

TEST_CASE("dedupe window") {
  Topology t;
  t.add_node(1);
  MeshNetwork net(t, {}, t0);
  CHECK(net.dedupe_seen(1, 5, 10) == Freshness::fresh);
  CHECK(net.dedupe_seen(1, 5, 10) == Freshness::duplicate);
  CHECK(net.dedupe_seen(1, 5, 11) == Freshness::fresh);
  net.advance_to(t0 + 29s);
  CHECK(net.dedupe_seen(1, 5, 10) == Freshness::duplicate);
  net.advance_to(t0 + 31s);
  CHECK(net.dedupe_seen(1, 5, 10) == Freshness::fresh);
}

TEST_CASE("discoveries keep succeeding after the sequence number wraps") {
  MeshNetwork net(line(4), {}, t0);
  std::vector<std::uint8_t> payload(9);
  int failures = 0;
  for (int i = 0; i < 1500; ++i) {
    net.advance_to(t0 + std::chrono::minutes(i));
    if (!std::holds_alternative<Delivery>(net.send_data(4, 1, payload))) ++failures;
  }
  CHECK(failures == 0);
}
