#pragma once

#include <algorithm>
#include <cstddef>
#include <map>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <tuple>
#include <vector>

#include "rollout_lab/cycles.hpp"
#include "rollout_lab/error.hpp"
#include "rollout_lab/generators.hpp"
#include "rollout_lab/network.hpp"
#include "rollout_lab/pattern.hpp"
#include "rollout_lab/tableau.hpp"
#include "rollout_lab/window.hpp"

namespace rollout_lab {

// ---------------------------------------------------------------------------
// Parallelism profile

struct ParallelismProfile {
  /// per_step[k] holds the window nodes first computed at update step k + 1.
  std::vector<std::vector<WindowNodeId>> per_step;
  std::vector<WindowNodeId> initial;
};

inline ParallelismProfile parallelism_profile(const RolloutWindow &window) {
  auto tableau = tableau_by_paths(window);
  ParallelismProfile out;
  out.per_step.resize(tableau.max());
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    if (tableau.steps[v] == 0)
      out.initial.push_back(v);
    else
      out.per_step[tableau.steps[v] - 1].push_back(v);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Weighted makespan

/// Abstract per-node update cost. Nodes missing from `node_cost` fall back to
/// `fallback`; without a fallback they are an error.
struct CostModel {
  std::map<NodeId, double> node_cost;
  std::optional<double> fallback = 1.0;

  static CostModel unit() { return {}; }

  double cost(const Network &net, NodeIndex v) const {
    auto it = node_cost.find(net.name(v));
    double c = 0;
    if (it != node_cost.end())
      c = it->second;
    else if (fallback)
      c = *fallback;
    else
      throw Error(ErrorKind::MissingCost, "no cost for node '" + net.name(v) + "'");
    if (!(c > 0))
      throw Error(ErrorKind::OutOfRange,
                  "cost of node '" + net.name(v) + "' must be positive");
    return c;
  }
};

struct MakespanReport {
  double total_time = 0;
  std::vector<WindowNodeId> critical_path;
  /// Completion time of each frame 0..W (frame 0 is initialized, so 0).
  std::vector<double> per_frame_time;
  std::vector<double> finish;
  std::optional<std::size_t> parallel_limit;
  /// Bounded-worker schedules come from a greedy list-scheduling heuristic.
  bool heuristic = false;
};

namespace detail {

inline std::vector<WindowNodeId> topological_order(const RolloutWindow &window) {
  std::vector<std::size_t> indegree(window.node_count());
  std::vector<WindowNodeId> order;
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    indegree[v] = window.in_edges(v).size();
    if (indegree[v] == 0)
      order.push_back(v);
  }
  for (std::size_t head = 0; head < order.size(); ++head) {
    for (std::size_t k : window.out_edges(order[head])) {
      WindowNodeId w = window.edges()[k].target;
      if (--indegree[w] == 0)
        order.push_back(w);
    }
  }
  return order;
}

inline void finish_makespan(const RolloutWindow &window, MakespanReport &r) {
  r.per_frame_time.assign(window.frame_count(), 0.0);
  WindowNodeId last = 0;
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    auto wn = window.node(v);
    r.per_frame_time[wn.frame] = std::max(r.per_frame_time[wn.frame], r.finish[v]);
    if (r.finish[v] > r.finish[last])
      last = v;
  }
  r.total_time = r.finish[last];
  if (r.total_time == 0)
    return;
  // Walk back along the latest-finishing predecessor.
  for (WindowNodeId v = last;;) {
    r.critical_path.push_back(v);
    const auto &in = window.in_edges(v);
    if (in.empty() || window.is_initial(v))
      break;
    WindowNodeId best = window.edges()[in.front()].source;
    for (std::size_t k : in) {
      WindowNodeId u = window.edges()[k].source;
      if (r.finish[u] > r.finish[best] || (r.finish[u] == r.finish[best] && u < best))
        best = u;
    }
    if (window.is_initial(best))
      break;
    v = best;
  }
  std::reverse(r.critical_path.begin(), r.critical_path.end());
}

} // namespace detail

/// Completion time of a window under a node-cost model. Without a worker limit
/// every node starts as soon as its predecessors finish. With a limit, ready
/// nodes are greedily dispatched, earliest-ready first and canonical order on
/// ties; that schedule is a heuristic, not an optimum.
inline MakespanReport weighted_makespan(const RolloutWindow &window, const CostModel &costs,
                                        std::optional<std::size_t> parallel_limit = {}) {
  window.require_valid();
  const auto &net = window.network();
  if (parallel_limit && *parallel_limit < 1)
    throw Error(ErrorKind::OutOfRange, "parallel limit must be >= 1");
  std::vector<double> cost(window.node_count(), 0.0);
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    if (!window.is_initial(v))
      cost[v] = costs.cost(net, window.node(v).node);
  }

  MakespanReport r;
  r.parallel_limit = parallel_limit;
  r.finish.assign(window.node_count(), 0.0);

  if (!parallel_limit) {
    for (WindowNodeId v : detail::topological_order(window)) {
      if (window.is_initial(v))
        continue;
      double start = 0;
      for (std::size_t k : window.in_edges(v))
        start = std::max(start, r.finish[window.edges()[k].source]);
      r.finish[v] = start + cost[v];
    }
    detail::finish_makespan(window, r);
    return r;
  }

  r.heuristic = true;
  std::vector<std::size_t> waiting(window.node_count(), 0);
  // (ready time, node id) ordered: earliest ready first, then canonical.
  std::set<std::pair<double, WindowNodeId>> ready;
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    if (window.is_initial(v))
      continue;
    for (std::size_t k : window.in_edges(v)) {
      if (!window.is_initial(window.edges()[k].source))
        ++waiting[v];
    }
    if (waiting[v] == 0)
      ready.emplace(0.0, v);
  }
  using Running = std::pair<double, WindowNodeId>;
  std::priority_queue<Running, std::vector<Running>, std::greater<>> running;
  double now = 0;
  while (!ready.empty() || !running.empty()) {
    while (running.size() < *parallel_limit && !ready.empty()) {
      auto [t, v] = *ready.begin();
      ready.erase(ready.begin());
      r.finish[v] = now + cost[v];
      running.emplace(r.finish[v], v);
    }
    now = running.top().first;
    while (!running.empty() && running.top().first == now) {
      WindowNodeId u = running.top().second;
      running.pop();
      for (std::size_t k : window.out_edges(u)) {
        WindowNodeId w = window.edges()[k].target;
        if (--waiting[w] == 0)
          ready.emplace(now, w);
      }
    }
  }
  detail::finish_makespan(window, r);
  return r;
}

// ---------------------------------------------------------------------------
// Carry-over streaming inference

/// Timing and input provenance of repeated size-1 windows where each window's
/// frame 0 is initialized from the previous window's frame 1. Window j (j >= 1)
/// consumes input sample j at its frame 1 (sample j - 1 sits in its frame 0)
/// and occupies update steps (j-1)F+1 .. jF, F being the inference factor.
struct CarryOverTrace {
  std::size_t inference_factor = 0;
  /// step[j][v]: global update step at which node v of frame j is computed
  /// (0 for frame 0 and input nodes). Index 0 is the initial frame.
  std::vector<std::vector<std::size_t>> step;
  /// samples[j][v]: input sample indices that causally reach node v of frame j.
  std::vector<std::vector<std::set<std::size_t>>> samples;
};

inline CarryOverTrace carry_over_trace(const Network &net, const RolloutPattern &pattern,
                                       std::size_t windows) {
  auto window = RolloutWindow::build(net, pattern, 1);
  window.require_valid();
  const std::size_t n = net.node_count();
  CarryOverTrace out;
  out.inference_factor = inference_factor(net, pattern);

  std::vector<std::set<std::size_t>> frame0(n);
  for (NodeIndex v : net.inputs())
    frame0[v] = {0};
  out.step.emplace_back(n, 0);
  out.samples.push_back(frame0);

  for (std::size_t j = 1; j <= windows; ++j) {
    // Node sets of the size-1 window: ids 0..n-1 are frame 0, n..2n-1 frame 1.
    std::vector<std::set<std::size_t>> sets(2 * n);
    for (NodeIndex v = 0; v < n; ++v) {
      sets[v] = out.samples[j - 1][v];
      if (net.is_input(v)) {
        sets[v] = {j - 1};
        sets[n + v] = {j};
      }
    }
    std::vector<std::size_t> steps(n, 0);
    UpdateState state = initial_state(window);
    for (std::size_t local = 1; !state.full(); ++local) {
      UpdateState next = update_step(window, state);
      for (NodeIndex v = 0; v < n; ++v) {
        WindowNodeId id = window.id(1, v);
        if (!next.flags[id] || state.flags[id])
          continue;
        steps[v] = (j - 1) * out.inference_factor + local;
        for (std::size_t k : window.in_edges(id)) {
          const auto &src = sets[window.edges()[k].source];
          sets[id].insert(src.begin(), src.end());
        }
      }
      state = std::move(next);
    }
    out.step.push_back(std::move(steps));
    out.samples.emplace_back(sets.begin() + static_cast<std::ptrdiff_t>(n), sets.end());
  }
  return out;
}

struct Response {
  std::size_t step = 0;
  std::size_t frame = 0;
  std::vector<std::size_t> samples;
};

struct ResponseProfile {
  std::optional<std::size_t> first_response_step;
  std::size_t sampling_period = 0;
  std::vector<Response> responses;
};

/// Output events of carry-over inference within `horizon` update steps. A
/// frame's response happens when its last output node is computed and carries
/// the input samples that reach any output of that frame; the first response is
/// the first one carrying at least one sample.
inline ResponseProfile response_profile(const Network &net, const RolloutPattern &pattern,
                                        const std::set<NodeId> &outputs,
                                        std::size_t horizon) {
  if (!is_valid(net, pattern))
    throw Error(ErrorKind::InvalidPattern, "pattern is not valid");
  if (horizon < 1)
    throw Error(ErrorKind::OutOfRange, "horizon must be >= 1");
  io_path_extremes(net, outputs); // NoInputOutputPath / unknown outputs
  std::vector<NodeIndex> out_nodes;
  for (const auto &name : outputs)
    out_nodes.push_back(net.node_index(name));

  const std::size_t factor = inference_factor(net, pattern);
  const std::size_t windows = (horizon + factor - 1) / factor;
  auto trace = carry_over_trace(net, pattern, windows);

  ResponseProfile out;
  out.sampling_period = factor;
  for (std::size_t j = 1; j <= windows; ++j) {
    Response r;
    r.frame = j;
    std::set<std::size_t> samples;
    for (NodeIndex o : out_nodes) {
      r.step = std::max(r.step, trace.step[j][o]);
      samples.insert(trace.samples[j][o].begin(), trace.samples[j][o].end());
    }
    if (r.step > horizon)
      break;
    r.samples.assign(samples.begin(), samples.end());
    if (!out.first_response_step && !r.samples.empty())
      out.first_response_step = r.step;
    out.responses.push_back(std::move(r));
  }
  return out;
}

/// Output nodes by convention: nodes with no edge to another node.
inline std::set<NodeId> default_outputs(const Network &net) {
  std::set<NodeId> out;
  for (NodeIndex v = 0; v < net.node_count(); ++v) {
    bool leaves = false;
    for (EdgeIndex e : net.out_edges(v))
      leaves = leaves || !net.edge(e).is_self_loop();
    if (!leaves)
      out.insert(net.name(v));
  }
  return out;
}

struct DsrSweepRow {
  int k = 0;
  std::size_t shortest_path = 0;
  std::size_t longest_path = 0;
  std::size_t streaming_first = 0;
  std::size_t sequential_first = 0;
  std::size_t difference = 0;
};

/// First-response times of the streaming and the most-sequential pattern over
/// DSR0..DSR6.
inline std::vector<DsrSweepRow> dsr_sweep(const std::set<NodeId> &outputs = {"O"}) {
  std::vector<DsrSweepRow> rows;
  for (int k = 0; k <= 6; ++k) {
    auto net = generate_dsr(k);
    auto extremes = io_path_extremes(net, outputs);
    auto sequential = most_sequential_patterns(net).front();
    std::size_t horizon = 2 * inference_factor(net, sequential) + 2 * extremes.longest;
    auto stream = response_profile(net, streaming_pattern(net), outputs, horizon);
    auto seq = response_profile(net, sequential, outputs, horizon);
    if (!stream.first_response_step || !seq.first_response_step)
      throw Error(ErrorKind::NoInputOutputPath, "no response within horizon");
    DsrSweepRow row;
    row.k = k;
    row.shortest_path = extremes.shortest;
    row.longest_path = extremes.longest;
    row.streaming_first = *stream.first_response_step;
    row.sequential_first = *seq.first_response_step;
    row.difference = row.sequential_first - row.streaming_first;
    rows.push_back(row);
  }
  return rows;
}

} // namespace rollout_lab
