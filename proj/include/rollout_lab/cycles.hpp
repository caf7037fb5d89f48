#pragma once

#include <algorithm>
#include <deque>
#include <limits>
#include <set>
#include <string>
#include <vector>

#include "rollout_lab/error.hpp"
#include "rollout_lab/limits.hpp"
#include "rollout_lab/network.hpp"

namespace rollout_lab {

namespace detail {

// Johnson's elementary-circuit search, restricted at each round to nodes with
// index >= start so every circuit is emitted once, rotated to its smallest node.
class CircuitFinder {
public:
  CircuitFinder(const Network &net, const Limits &limits)
      : net_(net), limits_(limits), blocked_(net.node_count(), false),
        block_map_(net.node_count()) {}

  std::vector<Path> run() {
    for (NodeIndex s = 0; s < net_.node_count(); ++s) {
      start_ = s;
      for (NodeIndex v = s; v < net_.node_count(); ++v) {
        blocked_[v] = false;
        block_map_[v].clear();
      }
      circuit(s);
    }
    return std::move(found_);
  }

private:
  bool circuit(NodeIndex v) {
    bool closed = false;
    blocked_[v] = true;
    for (EdgeIndex e : net_.out_edges(v)) {
      NodeIndex w = net_.edge(e).target;
      if (w < start_)
        continue;
      stack_.push_back(e);
      if (w == start_) {
        emit();
        closed = true;
      } else if (!blocked_[w] && circuit(w)) {
        closed = true;
      }
      stack_.pop_back();
    }
    if (closed) {
      unblock(v);
    } else {
      for (EdgeIndex e : net_.out_edges(v)) {
        NodeIndex w = net_.edge(e).target;
        if (w >= start_)
          block_map_[w].insert(v);
      }
    }
    return closed;
  }

  void unblock(NodeIndex v) {
    blocked_[v] = false;
    auto pending = std::move(block_map_[v]);
    block_map_[v].clear();
    for (NodeIndex w : pending) {
      if (blocked_[w])
        unblock(w);
    }
  }

  void emit() {
    if (!limits_.force && found_.size() >= limits_.cycle_cap)
      throw Error(ErrorKind::EnumerationCapExceeded,
                  "more than " + std::to_string(limits_.cycle_cap) +
                      " minimal cycles");
    found_.push_back(Path{stack_});
  }

  const Network &net_;
  const Limits &limits_;
  NodeIndex start_ = 0;
  std::vector<bool> blocked_;
  std::vector<std::set<NodeIndex>> block_map_;
  std::vector<EdgeIndex> stack_;
  std::vector<Path> found_;
};

inline std::vector<NodeIndex> cycle_nodes(const Network &net, const Path &p) {
  std::vector<NodeIndex> out;
  for (EdgeIndex e : p.edges)
    out.push_back(net.edge(e).source);
  return out;
}

inline std::vector<std::vector<bool>> reachability(const Network &net) {
  const std::size_t n = net.node_count();
  std::vector<std::vector<bool>> reach(n, std::vector<bool>(n, false));
  for (NodeIndex s = 0; s < n; ++s) {
    std::vector<NodeIndex> stack{s};
    while (!stack.empty()) {
      NodeIndex u = stack.back();
      stack.pop_back();
      for (EdgeIndex e : net.out_edges(u)) {
        NodeIndex w = net.edge(e).target;
        if (!reach[s][w]) {
          reach[s][w] = true;
          stack.push_back(w);
        }
      }
    }
  }
  return reach;
}

} // namespace detail

/// Every elementary circuit of the network exactly once, each rotated to start
/// at its smallest node and the list sorted by node sequence.
inline std::vector<Path> minimal_cycles(const Network &net,
                                        const Limits &limits = {}) {
  auto cycles = detail::CircuitFinder(net, limits).run();
  std::sort(cycles.begin(), cycles.end(), [&](const Path &a, const Path &b) {
    return detail::cycle_nodes(net, a) < detail::cycle_nodes(net, b);
  });
  return cycles;
}

struct CycleAnalysis {
  std::vector<EdgeIndex> recurrent_edges;
  std::vector<EdgeIndex> forward_edges;
  std::vector<Path> minimal_cycles;
  std::vector<Path> disjoint_cycle_set;
};

/// Self-loops, edges on no cycle, all minimal cycles, and a greedy set of
/// pairwise edge-disjoint minimal cycles (shortest first, canonical tie-break).
inline CycleAnalysis classify_edges(const Network &net,
                                    const Limits &limits = {}) {
  CycleAnalysis out;
  auto reach = detail::reachability(net);
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const Edge &edge = net.edge(e);
    if (edge.is_self_loop())
      out.recurrent_edges.push_back(e);
    // (u,v) closes a cycle iff v reaches u.
    if (!edge.is_self_loop() && !reach[edge.target][edge.source])
      out.forward_edges.push_back(e);
  }
  out.minimal_cycles = minimal_cycles(net, limits);

  std::vector<const Path *> by_length;
  for (const auto &p : out.minimal_cycles)
    by_length.push_back(&p);
  std::stable_sort(by_length.begin(), by_length.end(),
                   [](const Path *a, const Path *b) {
                     return a->length() < b->length();
                   });
  std::vector<bool> used(net.edge_count(), false);
  for (const Path *p : by_length) {
    bool clash = std::any_of(p->edges.begin(), p->edges.end(),
                             [&](EdgeIndex e) { return used[e]; });
    if (clash)
      continue;
    for (EdgeIndex e : p->edges)
      used[e] = true;
    out.disjoint_cycle_set.push_back(*p);
  }
  return out;
}

struct PathExtremes {
  std::size_t shortest = 0;
  std::size_t longest = 0;
};

/// Shortest and longest input-to-output path lengths. Paths never revisit a
/// node, so self-loops and other cycles do not stretch the longest path.
inline PathExtremes io_path_extremes(const Network &net,
                                     const std::set<NodeId> &outputs) {
  if (outputs.empty())
    throw Error(ErrorKind::DomainMismatch, "no output nodes given");
  std::vector<bool> is_output(net.node_count(), false);
  for (const auto &name : outputs)
    is_output[net.node_index(name)] = true;

  constexpr std::size_t none = std::numeric_limits<std::size_t>::max();
  std::size_t shortest = none;
  std::size_t longest = 0;

  // BFS over path lengths >= 1 from all inputs.
  {
    std::vector<std::size_t> dist(net.node_count(), none);
    std::deque<NodeIndex> queue;
    for (NodeIndex s : net.inputs()) {
      for (EdgeIndex e : net.out_edges(s)) {
        NodeIndex w = net.edge(e).target;
        if (dist[w] == none) {
          dist[w] = 1;
          queue.push_back(w);
        }
      }
    }
    while (!queue.empty()) {
      NodeIndex u = queue.front();
      queue.pop_front();
      for (EdgeIndex e : net.out_edges(u)) {
        NodeIndex w = net.edge(e).target;
        if (dist[w] == none) {
          dist[w] = dist[u] + 1;
          queue.push_back(w);
        }
      }
    }
    for (NodeIndex v = 0; v < net.node_count(); ++v) {
      if (is_output[v] && dist[v] != none)
        shortest = std::min(shortest, dist[v]);
    }
  }
  if (shortest == none)
    throw Error(ErrorKind::NoInputOutputPath,
                "no path from an input node to the outputs");

  std::vector<bool> on_path(net.node_count(), false);
  auto dfs = [&](auto &&self, NodeIndex u, std::size_t depth) -> void {
    if (depth > 0 && is_output[u])
      longest = std::max(longest, depth);
    for (EdgeIndex e : net.out_edges(u)) {
      NodeIndex w = net.edge(e).target;
      if (on_path[w])
        continue;
      on_path[w] = true;
      self(self, w, depth + 1);
      on_path[w] = false;
    }
  };
  for (NodeIndex s : net.inputs()) {
    on_path[s] = true;
    dfs(dfs, s, 0);
    on_path[s] = false;
  }
  return {shortest, longest};
}

} // namespace rollout_lab
