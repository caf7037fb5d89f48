#pragma once

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "rollout_lab/error.hpp"
#include "rollout_lab/limits.hpp"
#include "rollout_lab/network.hpp"
#include "rollout_lab/pattern.hpp"
#include "rollout_lab/window.hpp"

namespace rollout_lab {

/// Computed-flags over the nodes of one rollout window.
struct UpdateState {
  std::vector<std::uint8_t> flags;

  bool full() const {
    return std::all_of(flags.begin(), flags.end(), [](auto f) { return f != 0; });
  }
  std::size_t count() const {
    return static_cast<std::size_t>(std::count(flags.begin(), flags.end(), 1));
  }
  bool operator==(const UpdateState &) const = default;
};

/// Number of update steps after which each window node is computed.
struct InferenceTableau {
  std::size_t window_size = 0;
  std::size_t nodes_per_frame = 0;
  std::vector<std::size_t> steps;

  std::size_t at(std::size_t frame, NodeIndex node) const {
    return steps.at(frame * nodes_per_frame + node);
  }
  std::size_t max() const {
    return steps.empty() ? 0 : *std::max_element(steps.begin(), steps.end());
  }
  bool operator==(const InferenceTableau &) const = default;
};

namespace detail {

inline UpdateState initial_flags(const RolloutWindow &window) {
  UpdateState s;
  s.flags.resize(window.node_count());
  for (WindowNodeId v = 0; v < window.node_count(); ++v)
    s.flags[v] = window.is_initial(v) ? 1 : 0;
  return s;
}

} // namespace detail

/// Frame 0 and every input-node copy are computed; nothing else is.
inline UpdateState initial_state(const RolloutWindow &window) {
  window.require_valid();
  return detail::initial_flags(window);
}

inline UpdateState full_state(const RolloutWindow &window) {
  return UpdateState{std::vector<std::uint8_t>(window.node_count(), 1)};
}

/// One synchronous update: a node becomes computed once every (non-inert)
/// predecessor was computed in the given state.
inline UpdateState update_step(const RolloutWindow &window, const UpdateState &state) {
  if (state.flags.size() != window.node_count())
    throw Error(ErrorKind::DomainMismatch, "state does not match window");
  UpdateState next = state;
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    if (state.flags[v])
      continue;
    bool ready = true;
    for (std::size_t k : window.in_edges(v)) {
      if (!state.flags[window.edges()[k].source]) {
        ready = false;
        break;
      }
    }
    next.flags[v] = ready ? 1 : 0;
  }
  return next;
}

struct ConvergenceDiagnosis {
  bool converged = false;
  std::size_t steps = 0;
  /// Nodes never computed when the update iteration reached its fixed point.
  std::vector<WindowNodeId> stuck;
};

/// Iterates update steps from the initial state to a fixed point. Works on
/// invalid windows too, reporting the nodes that can never be computed.
inline ConvergenceDiagnosis diagnose_convergence(const RolloutWindow &window) {
  ConvergenceDiagnosis out;
  UpdateState state = detail::initial_flags(window);
  while (!state.full()) {
    UpdateState next = update_step(window, state);
    if (next == state)
      break;
    state = std::move(next);
    ++out.steps;
  }
  out.converged = state.full();
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    if (!state.flags[v])
      out.stuck.push_back(v);
  }
  return out;
}

/// Smallest n with U^n(S_init) = S_full.
inline std::size_t steps_to_full(const RolloutWindow &window) {
  auto diag = diagnose_convergence(window);
  if (!diag.converged) {
    std::string stuck;
    for (auto v : diag.stuck)
      stuck += (stuck.empty() ? "" : " ") + window.label(v);
    throw Error(ErrorKind::NonConvergence, "nodes never computed: " + stuck);
  }
  return diag.steps;
}

/// Tableau as the longest path ending at each node, ignoring edges that end in
/// frame 0. Longest-path DP over a topological order of the window.
inline InferenceTableau tableau_by_paths(const RolloutWindow &window) {
  window.require_valid();
  const std::size_t n = window.node_count();
  std::vector<std::size_t> indegree(n, 0);
  for (WindowNodeId v = 0; v < n; ++v)
    indegree[v] = window.in_edges(v).size();
  std::vector<WindowNodeId> order;
  for (WindowNodeId v = 0; v < n; ++v) {
    if (indegree[v] == 0)
      order.push_back(v);
  }
  InferenceTableau t{window.window_size(), window.network().node_count(),
                     std::vector<std::size_t>(n, 0)};
  for (std::size_t head = 0; head < order.size(); ++head) {
    WindowNodeId u = order[head];
    for (std::size_t k : window.out_edges(u)) {
      WindowNodeId w = window.edges()[k].target;
      t.steps[w] = std::max(t.steps[w], t.steps[u] + 1);
      if (--indegree[w] == 0)
        order.push_back(w);
    }
  }
  if (order.size() != n)
    throw Error(ErrorKind::InvalidPattern, "rollout window contains a cycle");
  return t;
}

/// Tableau as the first update step at which each node becomes computed.
inline InferenceTableau tableau_by_updates(const RolloutWindow &window) {
  window.require_valid();
  InferenceTableau t{window.window_size(), window.network().node_count(),
                     std::vector<std::size_t>(window.node_count(), 0)};
  UpdateState state = detail::initial_flags(window);
  for (std::size_t step = 1; !state.full(); ++step) {
    UpdateState next = update_step(window, state);
    if (next == state)
      throw Error(ErrorKind::InvalidPattern, "update steps stalled");
    for (WindowNodeId v = 0; v < window.node_count(); ++v) {
      if (next.flags[v] && !state.flags[v])
        t.steps[v] = step;
    }
    state = std::move(next);
  }
  return t;
}

/// Maximum tableau value over the size-1 window.
inline std::size_t inference_factor(const Network &net, const RolloutPattern &pattern) {
  auto window = RolloutWindow::build(net, pattern, 1);
  return tableau_by_paths(window).max();
}

/// Pointwise minimum of the size-W tableau over every valid pattern.
inline InferenceTableau minimal_tableau(const Network &net, std::size_t window_size,
                                        const Limits &limits = {}) {
  std::optional<InferenceTableau> best;
  for (const auto &p : enumerate_valid_patterns(net, limits)) {
    auto t = tableau_by_paths(RolloutWindow::build(net, p, window_size));
    if (!best) {
      best = std::move(t);
      continue;
    }
    for (std::size_t k = 0; k < t.steps.size(); ++k)
      best->steps[k] = std::min(best->steps[k], t.steps[k]);
  }
  return *best;
}

/// Pointwise minimum over a seeded sample of valid patterns, for networks too
/// large to enumerate. The streaming pattern is always part of the sample.
inline InferenceTableau sampled_minimal_tableau(const Network &net,
                                                std::size_t window_size,
                                                std::size_t samples,
                                                std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto best = tableau_by_paths(
      RolloutWindow::build(net, streaming_pattern(net), window_size));
  for (std::size_t s = 0; s < samples; ++s) {
    RolloutPattern p = streaming_pattern(net);
    for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
      if (!net.edge(e).is_self_loop())
        p.set(e, static_cast<int>(rng() & 1u));
    }
    if (!is_valid(net, p))
      continue;
    auto t = tableau_by_paths(RolloutWindow::build(net, p, window_size));
    for (std::size_t k = 0; k < t.steps.size(); ++k)
      best.steps[k] = std::min(best.steps[k], t.steps[k]);
  }
  return best;
}

enum class MinimalityMode { Exhaustive, Sampled, Skipped };

inline std::string_view minimality_mode_name(MinimalityMode mode) {
  switch (mode) {
  case MinimalityMode::Exhaustive: return "exhaustive";
  case MinimalityMode::Sampled: return "sampled, not exhaustive";
  case MinimalityMode::Skipped: return "skipped";
  }
  return "unknown";
}

/// Four characterizations of streaming-like patterns, each evaluated on its
/// own. For a valid pattern all four must agree.
struct Theorem1Report {
  bool a_equally_parallel = false;
  bool b_factor_one = false;
  bool c_frame_i_at_step_i = false;
  bool d_pointwise_minimal = false;
  MinimalityMode d_mode = MinimalityMode::Exhaustive;
  bool consistent = false;
};

struct Theorem1Options {
  bool check_minimality = true;
  /// When set, minimality falls back to sampling if enumeration exceeds the caps.
  std::optional<std::uint64_t> sample_seed;
  std::size_t samples = 4096;
  Limits limits;
};

namespace detail {

inline Theorem1Report theorem1_abc(const Network &net, const RolloutPattern &pattern,
                                   const InferenceTableau &tableau) {
  Theorem1Report r;
  r.a_equally_parallel = equally_model_parallel(net, pattern, streaming_pattern(net));
  r.b_factor_one = inference_factor(net, pattern) == 1;
  r.c_frame_i_at_step_i = true;
  for (std::size_t i = 0; i <= tableau.window_size; ++i)
    for (NodeIndex v = 0; v < net.node_count(); ++v)
      if (tableau.at(i, v) > i)
        r.c_frame_i_at_step_i = false;
  return r;
}

inline void finish_report(Theorem1Report &r) {
  bool same = r.a_equally_parallel == r.b_factor_one &&
              r.b_factor_one == r.c_frame_i_at_step_i;
  if (r.d_mode != MinimalityMode::Skipped)
    same = same && r.c_frame_i_at_step_i == r.d_pointwise_minimal;
  r.consistent = same;
}

} // namespace detail

/// Evaluates the four statements against a precomputed pointwise-minimal
/// tableau (see minimal_tableau), which lets callers amortize enumeration.
inline Theorem1Report theorem1_check(const Network &net, const RolloutPattern &pattern,
                                     std::size_t window_size,
                                     const InferenceTableau &minimum,
                                     MinimalityMode mode = MinimalityMode::Exhaustive) {
  auto window = RolloutWindow::build(net, pattern, window_size);
  auto tableau = tableau_by_paths(window);
  if (minimum.steps.size() != tableau.steps.size())
    throw Error(ErrorKind::DomainMismatch, "minimal tableau has wrong window size");
  auto r = detail::theorem1_abc(net, pattern, tableau);
  r.d_mode = mode;
  r.d_pointwise_minimal = tableau.steps == minimum.steps;
  detail::finish_report(r);
  return r;
}

inline Theorem1Report theorem1_check(const Network &net, const RolloutPattern &pattern,
                                     std::size_t window_size,
                                     const Theorem1Options &options = {}) {
  auto window = RolloutWindow::build(net, pattern, window_size);
  auto tableau = tableau_by_paths(window);
  if (!options.check_minimality) {
    auto r = detail::theorem1_abc(net, pattern, tableau);
    r.d_mode = MinimalityMode::Skipped;
    detail::finish_report(r);
    return r;
  }
  try {
    return theorem1_check(net, pattern, window_size,
                          minimal_tableau(net, window_size, options.limits));
  } catch (const Error &err) {
    if (err.kind() != ErrorKind::EnumerationCapExceeded || !options.sample_seed)
      throw;
  }
  return theorem1_check(
      net, pattern, window_size,
      sampled_minimal_tableau(net, window_size, options.samples, *options.sample_seed),
      MinimalityMode::Sampled);
}

} // namespace rollout_lab
