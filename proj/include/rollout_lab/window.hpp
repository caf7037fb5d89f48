#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <string>
#include <vector>

#include "rollout_lab/error.hpp"
#include "rollout_lab/network.hpp"
#include "rollout_lab/pattern.hpp"

namespace rollout_lab {

/// Node (i, v) of a rollout window: copy of network node v in frame i.
struct WindowNode {
  std::size_t frame = 0;
  NodeIndex node = 0;
  auto operator<=>(const WindowNode &) const = default;
};

using WindowNodeId = std::size_t;

struct WindowEdge {
  WindowNodeId source;
  WindowNodeId target;
  EdgeIndex network_edge;
  /// Copies of R(e) = 0 edges inside frame 0. Frame 0 is initialized from the
  /// start, so these never take part in an update.
  bool inert;
};

/// The unrolled graph over frames 0..W: an edge ((i,u),(j,v)) for every
/// network edge (u,v) and frame i with j = i + R(u,v) <= W. Window node ids are
/// frame * |V| + node, so iterating ids is canonical (frame, node) order.
class RolloutWindow {
public:
  static RolloutWindow build(const Network &net, const RolloutPattern &pattern,
                             std::size_t window_size) {
    check_domain(net, pattern);
    if (window_size < 1)
      throw Error(ErrorKind::WindowTooSmall, "window size must be >= 1");
    RolloutWindow w(net, pattern, window_size);
    const std::size_t n = net.node_count();
    for (std::size_t i = 0; i <= window_size; ++i) {
      for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
        std::size_t j = i + static_cast<std::size_t>(pattern[e]);
        if (j > window_size)
          continue;
        const Edge &edge = net.edge(e);
        w.edges_.push_back({i * n + edge.source, j * n + edge.target, e,
                            i == 0 && j == 0});
      }
    }
    w.in_.resize(w.node_count());
    w.out_.resize(w.node_count());
    for (std::size_t k = 0; k < w.edges_.size(); ++k) {
      const auto &we = w.edges_[k];
      if (we.inert)
        continue;
      w.in_[we.target].push_back(k);
      w.out_[we.source].push_back(k);
      ++w.active_edges_;
    }
    for (auto &list : w.in_) {
      std::sort(list.begin(), list.end(), [&](std::size_t a, std::size_t b) {
        return w.edges_[a].network_edge < w.edges_[b].network_edge;
      });
    }
    w.valid_ = is_valid(net, pattern);
    return w;
  }

  const Network &network() const noexcept { return net_; }
  const RolloutPattern &pattern() const noexcept { return pattern_; }
  bool pattern_valid() const noexcept { return valid_; }

  std::size_t window_size() const noexcept { return size_; }
  std::size_t frame_count() const noexcept { return size_ + 1; }
  std::size_t node_count() const noexcept { return frame_count() * net_.node_count(); }

  WindowNodeId id(std::size_t frame, NodeIndex node) const {
    return frame * net_.node_count() + node;
  }
  WindowNode node(WindowNodeId id) const {
    return {id / net_.node_count(), id % net_.node_count()};
  }
  std::string label(WindowNodeId id) const {
    auto wn = node(id);
    return "(" + std::to_string(wn.frame) + "," + net_.name(wn.node) + ")";
  }

  /// All window edges, inert ones included.
  const std::vector<WindowEdge> &edges() const noexcept { return edges_; }
  std::size_t active_edge_count() const noexcept { return active_edges_; }

  /// Indices into edges() of the non-inert edges entering / leaving a node;
  /// incoming edges are sorted by canonical network edge order.
  const std::vector<std::size_t> &in_edges(WindowNodeId v) const { return in_.at(v); }
  const std::vector<std::size_t> &out_edges(WindowNodeId v) const { return out_.at(v); }

  /// Nodes computed before any update: all of frame 0 and every input copy.
  bool is_initial(WindowNodeId v) const {
    auto wn = node(v);
    return wn.frame == 0 || net_.is_input(wn.node);
  }

  void require_valid() const {
    if (!valid_)
      throw Error(ErrorKind::InvalidPattern, "rollout window contains a cycle");
  }

private:
  RolloutWindow(const Network &net, const RolloutPattern &pattern, std::size_t size)
      : net_(net), pattern_(pattern), size_(size) {}

  Network net_;
  RolloutPattern pattern_;
  std::size_t size_;
  bool valid_ = false;
  std::vector<WindowEdge> edges_;
  std::vector<std::vector<std::size_t>> in_;
  std::vector<std::vector<std::size_t>> out_;
  std::size_t active_edges_ = 0;
};

/// Direct acyclicity check of the whole window graph (inert edges included),
/// independent of the pattern-level shortcut in is_valid.
inline bool is_acyclic(const RolloutWindow &window) {
  std::vector<std::size_t> indegree(window.node_count(), 0);
  std::vector<std::vector<WindowNodeId>> succ(window.node_count());
  for (const auto &e : window.edges()) {
    ++indegree[e.target];
    succ[e.source].push_back(e.target);
  }
  std::vector<WindowNodeId> queue;
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    if (indegree[v] == 0)
      queue.push_back(v);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (WindowNodeId w : succ[queue[head]]) {
      if (--indegree[w] == 0)
        queue.push_back(w);
    }
  }
  return queue.size() == window.node_count();
}

/// Window nodes lying on some directed cycle of the window graph.
inline std::vector<WindowNodeId> nodes_on_cycles(const RolloutWindow &window) {
  const std::size_t n = window.node_count();
  std::vector<std::vector<WindowNodeId>> succ(n);
  for (const auto &e : window.edges())
    succ[e.source].push_back(e.target);
  std::vector<WindowNodeId> out;
  for (WindowNodeId s = 0; s < n; ++s) {
    std::vector<bool> seen(n, false);
    std::vector<WindowNodeId> stack(succ[s].begin(), succ[s].end());
    bool back = false;
    while (!stack.empty() && !back) {
      WindowNodeId u = stack.back();
      stack.pop_back();
      if (u == s) {
        back = true;
        break;
      }
      if (seen[u])
        continue;
      seen[u] = true;
      stack.insert(stack.end(), succ[u].begin(), succ[u].end());
    }
    if (back)
      out.push_back(s);
  }
  return out;
}

} // namespace rollout_lab
