#pragma once

// Independent reference implementations used only by tests. None of these share
// code paths with the library they check.

#include <cstdint>
#include <deque>
#include <map>
#include <set>
#include <span>
#include <vector>

namespace oracle {

/// Bit-serial CRC-8 shift register, polynomial x^8 + x^2 + x + 1, init 0.
inline std::uint8_t crc8_shift_register(std::span<const std::uint8_t> data) {
  bool reg[8] = {};  // reg[7] is the MSB
  for (std::uint8_t byte : data) {
    for (int bit = 7; bit >= 0; --bit) {
      const bool in = ((byte >> bit) & 1) != 0;
      const bool feedback = reg[7] ^ in;
      for (int i = 7; i > 0; --i) reg[i] = reg[i - 1];
      reg[0] = feedback;
      // taps for x^2 and x^1
      reg[1] = reg[1] ^ feedback;
      reg[2] = reg[2] ^ feedback;
    }
  }
  std::uint8_t out = 0;
  for (int i = 7; i >= 0; --i) out = static_cast<std::uint8_t>((out << 1) | (reg[i] ? 1 : 0));
  return out;
}

inline std::uint8_t xor_fold(std::span<const std::uint8_t> data) {
  unsigned acc = 0;
  for (std::uint8_t b : data) acc = acc ^ b;
  return static_cast<std::uint8_t>(acc);
}

/// Little-endian two's complement of a signed integer, built with arithmetic only.
inline std::vector<std::uint8_t> le_twos_complement32(long long n) {
  unsigned long long u = n >= 0 ? static_cast<unsigned long long>(n)
                                : (1ULL << 32) - static_cast<unsigned long long>(-n);
  std::vector<std::uint8_t> out;
  for (int i = 0; i < 4; ++i) {
    out.push_back(static_cast<std::uint8_t>(u % 256));
    u /= 256;
  }
  return out;
}

/// Hop distances from `origin` over an undirected adjacency map.
inline std::map<int, int> bfs_hops(const std::map<int, std::set<int>>& adj, int origin) {
  std::map<int, int> dist{{origin, 0}};
  std::deque<int> queue{origin};
  while (!queue.empty()) {
    const int u = queue.front();
    queue.pop_front();
    auto it = adj.find(u);
    if (it == adj.end()) continue;
    for (int v : it->second) {
      if (dist.count(v)) continue;
      dist[v] = dist[u] + 1;
      queue.push_back(v);
    }
  }
  return dist;
}

}  // namespace oracle
