#pragma once

#include <array>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "rollout_lab/error.hpp"
#include "rollout_lab/network.hpp"

namespace rollout_lab {

/// Dense-skip recurrent family DSR0..DSR6: input I, block one H1..H13, block
/// two H2..H23, dense layer HD and output O. Inside each block every node feeds
/// every later node (including the next block's head), H1 has a self-loop, and
/// layers are inserted in the order H11, H21, H12, H22, H13, H23 so each
/// network is a sub-network of the next.
inline Network generate_dsr(int k) {
  if (k < 0 || k > 6)
    throw Error(ErrorKind::OutOfRange,
                "DSR depth must be in 0..6, got " + std::to_string(k));
  constexpr std::array<const char *, 6> insertion{"H11", "H21", "H12",
                                                  "H22", "H13", "H23"};
  auto present = [&](const std::string &name) {
    for (int i = 0; i < k; ++i) {
      if (name == insertion[i])
        return true;
    }
    return false;
  };

  std::vector<std::pair<NodeId, NodeId>> edges{{"I", "H1"}, {"H1", "H1"},
                                               {"HD", "O"}};
  auto dense_block = [&](const std::vector<std::string> &chain) {
    std::vector<std::string> nodes;
    for (std::size_t i = 0; i < chain.size(); ++i) {
      bool fixed = i == 0 || i + 1 == chain.size();
      if (fixed || present(chain[i]))
        nodes.push_back(chain[i]);
    }
    for (std::size_t i = 0; i < nodes.size(); ++i)
      for (std::size_t j = i + 1; j < nodes.size(); ++j)
        edges.emplace_back(nodes[i], nodes[j]);
  };
  dense_block({"H1", "H11", "H12", "H13", "H2"});
  dense_block({"H2", "H21", "H22", "H23", "HD"});
  return make_network(edges);
}

/// Seeded random network over nodes I, N1, ..., N{n-1} with I the only input.
/// Each ordered pair (u, v) with v != I, self-loops included, becomes an edge
/// with the given probability; nodes left unreachable from I are then wired
/// directly from I.
inline Network generate_random(std::size_t node_count, double edge_probability,
                               std::uint64_t seed) {
  if (node_count < 2)
    throw Error(ErrorKind::OutOfRange, "random networks need at least 2 nodes");
  std::vector<NodeId> names{"I"};
  for (std::size_t i = 1; i < node_count; ++i)
    names.push_back("N" + std::to_string(i));

  // Bit-level draw so results do not depend on the standard library's
  // distribution implementation.
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
  };

  std::vector<std::vector<bool>> adj(node_count,
                                     std::vector<bool>(node_count, false));
  for (std::size_t u = 0; u < node_count; ++u)
    for (std::size_t v = 1; v < node_count; ++v)
      adj[u][v] = uniform() < edge_probability;

  auto reached_from_input = [&] {
    std::vector<bool> seen(node_count, false);
    std::vector<std::size_t> stack{0};
    seen[0] = true;
    while (!stack.empty()) {
      auto u = stack.back();
      stack.pop_back();
      for (std::size_t v = 0; v < node_count; ++v) {
        if (adj[u][v] && !seen[v]) {
          seen[v] = true;
          stack.push_back(v);
        }
      }
    }
    return seen;
  };
  for (std::size_t v = 1; v < node_count; ++v) {
    if (!reached_from_input()[v])
      adj[0][v] = true;
  }

  std::vector<std::pair<NodeId, NodeId>> edges;
  for (std::size_t u = 0; u < node_count; ++u)
    for (std::size_t v = 0; v < node_count; ++v)
      if (adj[u][v])
        edges.emplace_back(names[u], names[v]);
  return Network::create({names, edges});
}

// Small named networks used throughout the tests and the CLI.

/// Input, two hidden layers, output: I -> H1 -> H2 -> O.
inline Network ff_network() {
  return make_network({{"I", "H1"}, {"H1", "H2"}, {"H2", "O"}});
}

/// ff_network plus the skip connection H1 -> O.
inline Network skip_network() {
  return make_network({{"I", "H1"}, {"H1", "H2"}, {"H2", "O"}, {"H1", "O"}});
}

/// skip_network plus the self-recurrence H1 -> H1.
inline Network skip_recurrent_network() {
  return make_network(
      {{"I", "H1"}, {"H1", "H1"}, {"H1", "H2"}, {"H2", "O"}, {"H1", "O"}});
}

/// I -> A1 -> ... -> A{depth}.
inline Network chain_network(std::size_t depth) {
  if (depth < 1)
    throw Error(ErrorKind::OutOfRange, "chain depth must be >= 1");
  std::vector<std::pair<NodeId, NodeId>> edges;
  NodeId prev = "I";
  for (std::size_t i = 1; i <= depth; ++i) {
    NodeId next = "A" + std::to_string(i);
    edges.emplace_back(prev, next);
    prev = next;
  }
  return make_network(edges);
}

} // namespace rollout_lab
