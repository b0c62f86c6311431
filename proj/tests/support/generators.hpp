#pragma once

#include <random>
#include <utility>
#include <vector>

#include "roomsense/protosim/codec.hpp"

namespace gen {

using namespace roomsense;
using namespace roomsense::protosim;

inline std::uint8_t pick(std::mt19937_64& rng, std::initializer_list<std::uint8_t> values) {
  std::uniform_int_distribution<std::size_t> d(0, values.size() - 1);
  return *(values.begin() + d(rng));
}

inline std::uint8_t byte(std::mt19937_64& rng) {
  return static_cast<std::uint8_t>(std::uniform_int_distribution<int>(0, 255)(rng));
}

inline MacAddress mac(std::mt19937_64& rng) {
  MacAddress m;
  for (auto& b : m.bytes) b = byte(rng);
  return m;
}

/// A valid BLE-like frame of any kind, drawing fields from their defined values.
inline BleFrame ble_frame(std::mt19937_64& rng) {
  switch (std::uniform_int_distribution<int>(0, 2)(rng)) {
    case 0:
      return BleRequest{pick(rng, {kOpRead, kOpSubscribe, kOpScan}),
                        pick(rng, {kCharTemperature, kCharHumidity, kCharLight, kCharPressure})};
    case 1: {
      std::uniform_int_distribution<std::int32_t> raw(-2147483647 + 1, 2147483647);
      return BleResponse{pick(rng, {kCharTemperature, kCharHumidity, kCharLight, kCharPressure}),
                         pick(rng, {kStatusOk, kStatusUnknownChar}), raw(rng),
                         static_cast<std::uint32_t>(rng())};
    }
    default: {
      BleScanResponse scan;
      const int n = std::uniform_int_distribution<int>(0, 8)(rng);
      for (int i = 0; i < n; ++i) scan.macs.push_back(mac(rng));
      return scan;
    }
  }
}

inline ZwaveFrame zwave_frame(std::mt19937_64& rng) {
  return ZwaveFrame{byte(rng), pick(rng, {kCmdDoor, kCmdMotion, kCmdRelaySet, kCmdRelayAck}),
                    pick(rng, {kZwaveOff, kZwaveOn}), byte(rng)};
}

struct Graph {
  int nodes = 0;
  std::vector<std::pair<int, int>> edges;  // a < b, no duplicates
};

/// Connected undirected graph on nodes 1..n (2 <= n <= max_nodes): a random spanning
/// tree plus each remaining pair with probability `extra`.
inline Graph connected_graph(std::mt19937_64& rng, int max_nodes, double extra = 0.25) {
  Graph g;
  g.nodes = std::uniform_int_distribution<int>(2, max_nodes)(rng);
  std::vector<std::vector<bool>> has(g.nodes + 1, std::vector<bool>(g.nodes + 1, false));
  auto add = [&](int a, int b) {
    if (a > b) std::swap(a, b);
    if (has[a][b]) return;
    has[a][b] = true;
    g.edges.emplace_back(a, b);
  };
  for (int v = 2; v <= g.nodes; ++v) add(std::uniform_int_distribution<int>(1, v - 1)(rng), v);
  std::bernoulli_distribution coin(extra);
  for (int a = 1; a <= g.nodes; ++a)
    for (int b = a + 1; b <= g.nodes; ++b)
      if (coin(rng)) add(a, b);
  return g;
}

}  // namespace gen
