#pragma once

#include <algorithm>
#include <atomic>
#include <bit>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "rollout_lab/cycles.hpp"
#include "rollout_lab/error.hpp"
#include "rollout_lab/limits.hpp"
#include "rollout_lab/network.hpp"

namespace rollout_lab {

using BigCount = boost::multiprecision::cpp_int;

/// Assignment of 0 (within the frame) or 1 (to the next frame) to every edge,
/// indexed by canonical edge order of the network it was built for.
class RolloutPattern {
public:
  RolloutPattern() = default;
  explicit RolloutPattern(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (auto &b : bits_) {
      if (b > 1)
        throw Error(ErrorKind::DomainMismatch, "pattern values must be 0 or 1");
    }
  }

  static RolloutPattern uniform(const Network &net, int value) {
    return RolloutPattern(std::vector<std::uint8_t>(
        net.edge_count(), static_cast<std::uint8_t>(value != 0)));
  }

  /// Builds a pattern from "src->tgt" keys; the keys must cover the edge set
  /// exactly.
  static RolloutPattern from_assignment(const Network &net,
                                        const std::map<std::string, int> &values) {
    std::vector<std::uint8_t> bits(net.edge_count(), 0);
    std::vector<bool> covered(net.edge_count(), false);
    for (const auto &[key, value] : values) {
      auto arrow = key.find("->");
      if (arrow == std::string::npos)
        throw Error(ErrorKind::DomainMismatch, "bad edge key '" + key + "'");
      auto s = net.find_node(key.substr(0, arrow));
      auto t = net.find_node(key.substr(arrow + 2));
      std::optional<EdgeIndex> e;
      if (s && t)
        e = net.find_edge(*s, *t);
      if (!e)
        throw Error(ErrorKind::DomainMismatch, "edge '" + key + "' not in network");
      if (value != 0 && value != 1)
        throw Error(ErrorKind::DomainMismatch,
                    "edge '" + key + "' must map to 0 or 1");
      bits[*e] = static_cast<std::uint8_t>(value);
      covered[*e] = true;
    }
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      if (!covered[e])
        throw Error(ErrorKind::DomainMismatch,
                    "pattern misses edge '" + net.edge_label(e) + "'");
    }
    return RolloutPattern(std::move(bits));
  }

  std::size_t size() const noexcept { return bits_.size(); }
  int operator[](EdgeIndex e) const { return bits_.at(e); }
  void set(EdgeIndex e, int value) { bits_.at(e) = static_cast<std::uint8_t>(value != 0); }
  const std::vector<std::uint8_t> &bits() const noexcept { return bits_; }

  std::size_t ones() const {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), 1));
  }
  std::size_t zeros() const { return bits_.size() - ones(); }

  std::map<std::string, int> assignment(const Network &net) const {
    std::map<std::string, int> out;
    for (EdgeIndex e = 0; e < bits_.size(); ++e)
      out[net.edge_label(e)] = bits_[e];
    return out;
  }

  auto operator<=>(const RolloutPattern &) const = default;

private:
  std::vector<std::uint8_t> bits_;
};

inline void check_domain(const Network &net, const RolloutPattern &pattern) {
  if (pattern.size() != net.edge_count())
    throw Error(ErrorKind::DomainMismatch,
                "pattern covers " + std::to_string(pattern.size()) +
                    " edges, network has " + std::to_string(net.edge_count()));
}

/// R = 1 on every edge.
inline RolloutPattern streaming_pattern(const Network &net) {
  return RolloutPattern::uniform(net, 1);
}

namespace detail {

// Kahn's algorithm on the sub-graph of edges the pattern keeps inside a frame.
// Scratch buffers are passed in so the enumeration loop does not allocate.
inline bool zero_subgraph_acyclic(const Network &net,
                                  const std::vector<std::uint8_t> &bits,
                                  std::vector<std::size_t> &indegree,
                                  std::vector<NodeIndex> &queue) {
  const std::size_t n = net.node_count();
  indegree.assign(n, 0);
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (bits[e] == 0)
      ++indegree[net.edge(e).target];
  }
  queue.clear();
  for (NodeIndex v = 0; v < n; ++v) {
    if (indegree[v] == 0)
      queue.push_back(v);
  }
  for (std::size_t head = 0; head < queue.size(); ++head) {
    for (EdgeIndex e : net.out_edges(queue[head])) {
      if (bits[e] == 0 && --indegree[net.edge(e).target] == 0)
        queue.push_back(net.edge(e).target);
    }
  }
  return queue.size() == n;
}

inline std::vector<EdgeIndex> non_self_loop_edges(const Network &net) {
  std::vector<EdgeIndex> out;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (!net.edge(e).is_self_loop())
      out.push_back(e);
  }
  return out;
}

inline void apply_counter(const std::vector<EdgeIndex> &free_edges,
                          std::uint64_t counter, std::vector<std::uint8_t> &bits) {
  for (std::size_t k = 0; k < free_edges.size(); ++k)
    bits[free_edges[k]] = static_cast<std::uint8_t>((counter >> k) & 1u);
}

inline unsigned worker_count(const Limits &limits) {
  return std::max(1u, limits.threads);
}

} // namespace detail

/// A pattern is valid iff its rollout windows are acyclic. Window edges never
/// point backwards in time, so a window cycle lies inside one frame, where the
/// edges are exactly those with R(e) = 0.
inline bool is_valid(const Network &net, const RolloutPattern &pattern) {
  check_domain(net, pattern);
  std::vector<std::size_t> indegree;
  std::vector<NodeIndex> queue;
  return detail::zero_subgraph_acyclic(net, pattern.bits(), indegree, queue);
}

/// Position of a pattern in enumeration order: a binary counter over the
/// canonically ordered non-self-loop edges, first edge least significant.
inline std::uint64_t canonical_index(const Network &net, const RolloutPattern &pattern) {
  check_domain(net, pattern);
  auto free_edges = detail::non_self_loop_edges(net);
  if (free_edges.size() >= 64)
    throw Error(ErrorKind::EnumerationCapExceeded, "too many edges to index");
  std::uint64_t index = 0;
  for (std::size_t k = 0; k < free_edges.size(); ++k)
    index |= static_cast<std::uint64_t>(pattern[free_edges[k]]) << k;
  return index;
}

namespace detail {

// Counters (see canonical_index) of all valid patterns, in increasing order.
inline std::vector<std::uint64_t> valid_counters(const Network &net,
                                                 const std::vector<EdgeIndex> &free_edges,
                                                 const Limits &limits) {
  const std::size_t m = free_edges.size();
  if (m >= 64 || (!limits.force && m > limits.max_free_edges))
    throw Error(ErrorKind::EnumerationCapExceeded,
                std::to_string(m) + " free edges exceed the enumeration cap of " +
                    std::to_string(limits.max_free_edges));
  const std::uint64_t total = std::uint64_t{1} << m;

  const unsigned workers = worker_count(limits);
  const std::uint64_t chunk_count =
      std::min<std::uint64_t>(total, std::uint64_t{workers} * 16);
  std::vector<std::vector<std::uint64_t>> chunks(chunk_count);
  std::atomic<std::uint64_t> next_chunk{0};

  auto work = [&] {
    auto bits = RolloutPattern::uniform(net, 1).bits();
    std::vector<std::size_t> indegree;
    std::vector<NodeIndex> queue;
    for (std::uint64_t c = next_chunk++; c < chunk_count; c = next_chunk++) {
      std::uint64_t begin = total / chunk_count * c + std::min(c, total % chunk_count);
      std::uint64_t end = begin + total / chunk_count + (c < total % chunk_count ? 1 : 0);
      for (std::uint64_t counter = begin; counter < end; ++counter) {
        apply_counter(free_edges, counter, bits);
        if (zero_subgraph_acyclic(net, bits, indegree, queue))
          chunks[c].push_back(counter);
      }
    }
  };
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (unsigned w = 0; w < workers; ++w)
      pool.emplace_back(work);
  }

  std::vector<std::uint64_t> out;
  for (const auto &chunk : chunks)
    out.insert(out.end(), chunk.begin(), chunk.end());
  return out;
}

} // namespace detail

/// All valid patterns in canonical enumeration order. Self-loops are fixed to
/// 1; the remaining edges are iterated as a binary counter.
inline std::vector<RolloutPattern> enumerate_valid_patterns(const Network &net,
                                                            const Limits &limits = {}) {
  const auto free_edges = detail::non_self_loop_edges(net);
  std::vector<RolloutPattern> out;
  auto bits = RolloutPattern::uniform(net, 1).bits();
  for (std::uint64_t counter : detail::valid_counters(net, free_edges, limits)) {
    detail::apply_counter(free_edges, counter, bits);
    out.emplace_back(bits);
  }
  return out;
}

inline std::uint64_t count_valid_patterns(const Network &net, const Limits &limits = {}) {
  return detail::valid_counters(net, detail::non_self_loop_edges(net), limits).size();
}

/// Valid patterns with the largest number of 0-edges, in canonical order.
/// Edges on no cycle are always 0 and self-loops always 1 in such a pattern,
/// so only the remaining cyclic edges are searched, fewest 1-edges first.
inline std::vector<RolloutPattern> most_sequential_patterns(const Network &net,
                                                            const Limits &limits = {}) {
  auto analysis = classify_edges(net, limits);
  std::vector<bool> forward(net.edge_count(), false);
  for (EdgeIndex e : analysis.forward_edges)
    forward[e] = true;
  std::vector<EdgeIndex> cyclic;
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (!forward[e] && !net.edge(e).is_self_loop())
      cyclic.push_back(e);
  }
  const std::size_t m = cyclic.size();
  if (m >= 64 || (!limits.force && m > limits.max_free_edges))
    throw Error(ErrorKind::EnumerationCapExceeded,
                std::to_string(m) + " cyclic edges exceed the enumeration cap");

  std::vector<std::uint8_t> base(net.edge_count(), 0);
  for (EdgeIndex e = 0; e < net.edge_count(); ++e)
    base[e] = net.edge(e).is_self_loop() ? 1 : 0;

  std::vector<RolloutPattern> out;
  std::vector<std::size_t> indegree;
  std::vector<NodeIndex> queue;
  for (std::size_t ones = 0; ones <= m && out.empty(); ++ones) {
    // Walk all m-bit masks with exactly `ones` bits set (Gosper's hack).
    std::uint64_t mask = ones == 0 ? 0 : (std::uint64_t{1} << ones) - 1;
    const std::uint64_t limit = std::uint64_t{1} << m;
    while (mask < limit) {
      auto bits = base;
      for (std::size_t k = 0; k < m; ++k)
        bits[cyclic[k]] = static_cast<std::uint8_t>((mask >> k) & 1u);
      if (detail::zero_subgraph_acyclic(net, bits, indegree, queue))
        out.emplace_back(std::move(bits));
      if (mask == 0)
        break;
      std::uint64_t low = mask & (~mask + 1);
      std::uint64_t ripple = mask + low;
      mask = ripple | (((ripple ^ mask) >> 2) / low);
    }
  }
  std::sort(out.begin(), out.end(),
            [&](const RolloutPattern &a, const RolloutPattern &b) {
              return canonical_index(net, a) < canonical_index(net, b);
            });
  return out;
}

/// True iff the patterns agree on every edge not leaving an input node.
inline bool equally_model_parallel(const Network &net, const RolloutPattern &a,
                                   const RolloutPattern &b) {
  check_domain(net, a);
  check_domain(net, b);
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    if (!net.is_input(net.edge(e).source) && a[e] != b[e])
      return false;
  }
  return true;
}

struct Lemma1Bounds {
  BigCount lower_forward;
  BigCount lower_cycle;
  BigCount lower;
  BigCount upper;
  std::optional<BigCount> exact_count;
};

/// Lower and upper bounds on the number of valid patterns; the cycle bound
/// uses the greedy disjoint cycle set of classify_edges.
inline Lemma1Bounds lemma1_bounds(const Network &net, bool with_exact,
                                  const Limits &limits = {}) {
  auto analysis = classify_edges(net, limits);
  auto pow2 = [](std::size_t k) { return BigCount(1) << k; };
  Lemma1Bounds out;
  out.lower_forward = pow2(analysis.forward_edges.size());
  out.lower_cycle = 1;
  for (const auto &p : analysis.disjoint_cycle_set)
    out.lower_cycle *= pow2(p.length()) - 1;
  out.lower = std::max(out.lower_forward, out.lower_cycle);
  out.upper = pow2(net.edge_count() - analysis.recurrent_edges.size());
  if (with_exact)
    out.exact_count = BigCount(count_valid_patterns(net, limits));
  return out;
}

} // namespace rollout_lab
