#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rollout_lab/error.hpp"
#include "rollout_lab/network.hpp"
#include "rollout_lab/pattern.hpp"
#include "rollout_lab/scheduler.hpp"
#include "rollout_lab/tableau.hpp"
#include "rollout_lab/window.hpp"

namespace rollout_lab {

enum class Activation { Identity, Relu, Tanh };

inline std::string_view activation_name(Activation a) {
  switch (a) {
  case Activation::Identity: return "identity";
  case Activation::Relu: return "relu";
  case Activation::Tanh: return "tanh";
  }
  return "identity";
}

inline Activation parse_activation(std::string_view name) {
  if (name == "identity")
    return Activation::Identity;
  if (name == "relu")
    return Activation::Relu;
  if (name == "tanh")
    return Activation::Tanh;
  throw ParseError("unknown activation '" + std::string(name) + "'", 0, 0);
}

inline double activate(Activation a, double x) {
  switch (a) {
  case Activation::Identity: return x;
  case Activation::Relu: return x > 0 ? x : 0.0;
  case Activation::Tanh: return std::tanh(x);
  }
  return x;
}

/// Dense row-major matrix.
struct Matrix {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;

  static Matrix identity(std::size_t n) {
    Matrix m{n, n, std::vector<double>(n * n, 0.0)};
    for (std::size_t i = 0; i < n; ++i)
      m.values[i * n + i] = 1.0;
    return m;
  }

  double at(std::size_t r, std::size_t c) const { return values[r * cols + c]; }

  /// acc += M x
  void accumulate(const std::vector<double> &x, std::vector<double> &acc) const {
    for (std::size_t r = 0; r < rows; ++r) {
      double sum = 0;
      for (std::size_t c = 0; c < cols; ++c)
        sum += values[r * cols + c] * x[c];
      acc[r] += sum;
    }
  }

  bool operator==(const Matrix &) const = default;
};

/// Numeric instantiation of a network: node state sizes, one affine map per
/// edge, a bias per non-input node and one pointwise activation.
struct NumericSpec {
  std::map<NodeId, std::size_t> dims;
  std::map<std::pair<NodeId, NodeId>, Matrix> edge_params;
  std::map<NodeId, std::vector<double>> node_bias;
  Activation activation = Activation::Identity;

  bool operator==(const NumericSpec &) const = default;
};

using NodeValues = std::map<NodeId, std::vector<double>>;

namespace detail {

// NumericSpec resolved against one network's indices.
struct BoundSpec {
  std::vector<std::size_t> dims;
  std::vector<const Matrix *> theta;
  std::vector<std::vector<double>> bias;
  Activation activation;
};

inline BoundSpec bind(const Network &net, const NumericSpec &spec) {
  BoundSpec b;
  b.activation = spec.activation;
  for (NodeIndex v = 0; v < net.node_count(); ++v) {
    auto it = spec.dims.find(net.name(v));
    if (it == spec.dims.end() || it->second == 0)
      throw Error(ErrorKind::ShapeMismatch,
                  "node '" + net.name(v) + "' needs a positive dimension");
    b.dims.push_back(it->second);
  }
  for (const auto &[name, d] : spec.dims) {
    if (!net.find_node(name))
      throw Error(ErrorKind::ShapeMismatch, "dimension for unknown node '" + name + "'");
  }
  for (EdgeIndex e = 0; e < net.edge_count(); ++e) {
    const Edge &edge = net.edge(e);
    auto it = spec.edge_params.find({net.name(edge.source), net.name(edge.target)});
    if (it == spec.edge_params.end())
      throw Error(ErrorKind::ShapeMismatch, "no matrix for edge " + net.edge_label(e));
    const Matrix &m = it->second;
    if (m.rows != b.dims[edge.target] || m.cols != b.dims[edge.source] ||
        m.values.size() != m.rows * m.cols)
      throw Error(ErrorKind::ShapeMismatch, "matrix of edge " + net.edge_label(e) +
                                                " must be " +
                                                std::to_string(b.dims[edge.target]) + "x" +
                                                std::to_string(b.dims[edge.source]));
    b.theta.push_back(&m);
  }
  if (spec.edge_params.size() != net.edge_count())
    throw Error(ErrorKind::ShapeMismatch, "matrices given for edges not in the network");
  b.bias.resize(net.node_count());
  for (NodeIndex v = 0; v < net.node_count(); ++v) {
    auto it = spec.node_bias.find(net.name(v));
    if (net.is_input(v)) {
      if (it != spec.node_bias.end())
        throw Error(ErrorKind::ShapeMismatch,
                    "input node '" + net.name(v) + "' cannot carry a bias");
      continue;
    }
    if (it == spec.node_bias.end()) {
      b.bias[v].assign(b.dims[v], 0.0);
    } else if (it->second.size() != b.dims[v]) {
      throw Error(ErrorKind::ShapeMismatch, "bias of '" + net.name(v) + "' has wrong length");
    } else {
      b.bias[v] = it->second;
    }
  }
  return b;
}

inline const std::vector<double> &lookup(const NodeValues &values, const Network &net,
                                         NodeIndex v, std::size_t dim,
                                         std::string_view what) {
  auto it = values.find(net.name(v));
  if (it == values.end())
    throw Error(ErrorKind::MissingInput,
                std::string(what) + " missing for node '" + net.name(v) + "'");
  if (it->second.size() != dim)
    throw Error(ErrorKind::ShapeMismatch,
                std::string(what) + " for node '" + net.name(v) + "' has wrong length");
  return it->second;
}

} // namespace detail

/// Seeded random spec: dims uniform in 1..max_dim, weights and biases uniform
/// in [-1, 1].
inline NumericSpec random_numeric_spec(const Network &net, std::size_t max_dim,
                                       Activation activation, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  auto uniform = [&rng] {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  };
  NumericSpec spec;
  spec.activation = activation;
  for (NodeIndex v = 0; v < net.node_count(); ++v)
    spec.dims[net.name(v)] = 1 + static_cast<std::size_t>(rng() % std::max<std::size_t>(1, max_dim));
  for (const auto &edge : net.edges()) {
    const auto &s = net.name(edge.source);
    const auto &t = net.name(edge.target);
    Matrix m{spec.dims[t], spec.dims[s], {}};
    for (std::size_t k = 0; k < m.rows * m.cols; ++k)
      m.values.push_back(uniform());
    spec.edge_params.emplace(std::make_pair(s, t), std::move(m));
  }
  for (NodeIndex v = 0; v < net.node_count(); ++v) {
    if (net.is_input(v))
      continue;
    std::vector<double> b;
    for (std::size_t k = 0; k < spec.dims[net.name(v)]; ++k)
      b.push_back(uniform());
    spec.node_bias[net.name(v)] = std::move(b);
  }
  return spec;
}

struct ExecutionTrace {
  /// values[frame][node]
  std::vector<std::vector<std::vector<double>>> frame_states;
  /// (update step, window node) in evaluation order.
  std::vector<std::pair<std::size_t, WindowNode>> update_order;

  const std::vector<double> &at(std::size_t frame, NodeIndex node) const {
    return frame_states.at(frame).at(node);
  }
};

/// Evaluates every non-initial window node as
///   x = act(bias + sum over incoming window edges of theta_e * x_source)
/// in tableau order, summing in canonical edge order. `inputs[i]` holds the
/// input-node vectors of frame i; frame-0 non-input nodes start at zero unless
/// `frame0` supplies their values. `tie_shuffle_seed` permutes nodes sharing a
/// tableau value, which must not change any result.
inline ExecutionTrace execute_window(const Network &net, const RolloutPattern &pattern,
                                     std::size_t window_size, const NumericSpec &spec,
                                     const std::vector<NodeValues> &inputs,
                                     const NodeValues *frame0 = nullptr,
                                     std::optional<std::uint64_t> tie_shuffle_seed = {}) {
  auto window = RolloutWindow::build(net, pattern, window_size);
  window.require_valid();
  auto bound = detail::bind(net, spec);
  if (inputs.size() < window.frame_count())
    throw Error(ErrorKind::MissingInput, "inputs needed for frames 0.." +
                                             std::to_string(window_size));

  ExecutionTrace trace;
  trace.frame_states.resize(window.frame_count());
  for (std::size_t i = 0; i < window.frame_count(); ++i) {
    auto &frame = trace.frame_states[i];
    frame.resize(net.node_count());
    for (NodeIndex v = 0; v < net.node_count(); ++v) {
      if (net.is_input(v))
        frame[v] = detail::lookup(inputs[i], net, v, bound.dims[v], "input");
      else if (i == 0 && frame0 && frame0->count(net.name(v)))
        frame[v] = detail::lookup(*frame0, net, v, bound.dims[v], "initial state");
      else
        frame[v].assign(bound.dims[v], 0.0);
    }
  }

  auto tableau = tableau_by_paths(window);
  std::vector<WindowNodeId> order;
  for (WindowNodeId v = 0; v < window.node_count(); ++v) {
    if (!window.is_initial(v))
      order.push_back(v);
  }
  if (tie_shuffle_seed) {
    std::mt19937_64 rng(*tie_shuffle_seed);
    std::shuffle(order.begin(), order.end(), rng);
  }
  std::stable_sort(order.begin(), order.end(), [&](WindowNodeId a, WindowNodeId b) {
    return tableau.steps[a] < tableau.steps[b];
  });

  for (WindowNodeId id : order) {
    auto wn = window.node(id);
    std::vector<double> acc(bound.dims[wn.node], 0.0);
    for (std::size_t k : window.in_edges(id)) {
      const auto &we = window.edges()[k];
      auto src = window.node(we.source);
      bound.theta[we.network_edge]->accumulate(trace.frame_states[src.frame][src.node], acc);
    }
    for (std::size_t r = 0; r < acc.size(); ++r)
      acc[r] = activate(bound.activation, acc[r] + bound.bias[wn.node][r]);
    trace.frame_states[wn.frame][wn.node] = std::move(acc);
    trace.update_order.emplace_back(tableau.steps[id], wn);
  }
  return trace;
}

struct StreamOutput {
  std::size_t step = 0;
  std::size_t frame = 0;
  NodeValues values;
};

/// Carry-over inference with size-1 windows for `steps` update steps. Window j
/// reads input_sequence[j-1] (frame 0) and input_sequence[j] (frame 1), starts
/// from the previous window's frame 1, and its outputs are stamped with the
/// update step at which the last output node is computed.
inline std::vector<StreamOutput> execute_stream(const Network &net,
                                                const RolloutPattern &pattern,
                                                const NumericSpec &spec,
                                                const std::vector<NodeValues> &input_sequence,
                                                std::size_t steps,
                                                const std::set<NodeId> &outputs) {
  if (!is_valid(net, pattern))
    throw Error(ErrorKind::InvalidPattern, "pattern is not valid");
  std::vector<NodeIndex> out_nodes;
  for (const auto &name : outputs)
    out_nodes.push_back(net.node_index(name));

  auto window = RolloutWindow::build(net, pattern, 1);
  auto tableau = tableau_by_paths(window);
  const std::size_t factor = tableau.max();
  std::size_t output_offset = 0;
  for (NodeIndex o : out_nodes)
    output_offset = std::max(output_offset, tableau.at(1, o));

  std::vector<StreamOutput> out;
  NodeValues carry;
  output_offset = std::max<std::size_t>(output_offset, 1);
  for (std::size_t j = 1; (j - 1) * factor + output_offset <= steps; ++j) {
    if (input_sequence.size() < j + 1)
      throw Error(ErrorKind::MissingInput,
                  "window " + std::to_string(j) + " needs input sample " + std::to_string(j));
    std::vector<NodeValues> frames{input_sequence[j - 1], input_sequence[j]};
    auto trace = execute_window(net, pattern, 1, spec, frames, j == 1 ? nullptr : &carry);
    carry.clear();
    for (NodeIndex v = 0; v < net.node_count(); ++v) {
      if (!net.is_input(v))
        carry[net.name(v)] = trace.at(1, v);
    }
    StreamOutput o;
    o.step = (j - 1) * factor + output_offset;
    o.frame = j;
    for (NodeIndex v : out_nodes)
      o.values[net.name(v)] = trace.at(1, v);
    out.push_back(std::move(o));
  }
  return out;
}

struct OffsetDeviation {
  long offset = 0;
  double max_deviation = 0;
  std::size_t compared_frames = 0;
};

struct ComparisonReport {
  std::vector<OffsetDeviation> offsets;
  long best_offset = 0;
  double best_deviation = std::numeric_limits<double>::infinity();
  bool steady_state_equivalent = false;
};

/// Runs both patterns on the same seeded random input streams and compares
/// their output sequences frame against frame shifted by each offset d
/// (output of a at frame j against b at frame j + d), counting only frames
/// whose outputs already depend on some input sample. Steady-state equivalent
/// when one offset stays within tolerance across all trials.
inline ComparisonReport compare_rollout_functions(const Network &net, const RolloutPattern &a,
                                                  const RolloutPattern &b,
                                                  const NumericSpec &spec, std::size_t trials,
                                                  double tolerance, std::uint64_t seed,
                                                  const std::set<NodeId> &outputs) {
  if (!is_valid(net, a) || !is_valid(net, b))
    throw Error(ErrorKind::InvalidPattern, "both patterns must be valid");
  auto bound = detail::bind(net, spec);
  const std::size_t frames = 4 * (net.node_count() + 2) + 8;
  const long max_offset = static_cast<long>(net.node_count()) + 1;
  const std::size_t min_overlap = 3;

  auto first_response_frame = [&](const RolloutPattern &p) {
    auto trace = carry_over_trace(net, p, frames);
    for (std::size_t j = 1; j <= frames; ++j) {
      for (const auto &name : outputs) {
        if (!trace.samples[j][net.node_index(name)].empty())
          return j;
      }
    }
    return frames + 1;
  };
  const std::size_t first_a = first_response_frame(a);
  const std::size_t first_b = first_response_frame(b);

  ComparisonReport report;
  for (long d = -max_offset; d <= max_offset; ++d)
    report.offsets.push_back({d, 0.0, 0});

  std::mt19937_64 rng(seed);
  auto uniform = [&rng] {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53 * 2.0 - 1.0;
  };
  for (std::size_t trial = 0; trial < trials; ++trial) {
    std::vector<NodeValues> inputs(frames + 1);
    for (auto &frame : inputs) {
      for (NodeIndex v : net.inputs()) {
        std::vector<double> x;
        for (std::size_t k = 0; k < bound.dims[v]; ++k)
          x.push_back(uniform());
        frame[net.name(v)] = std::move(x);
      }
    }
    auto run = [&](const RolloutPattern &p) {
      std::size_t factor = inference_factor(net, p);
      return execute_stream(net, p, spec, inputs, frames * factor, outputs);
    };
    auto out_a = run(a);
    auto out_b = run(b);
    for (auto &entry : report.offsets) {
      double dev = 0;
      std::size_t count = 0;
      for (const auto &oa : out_a) {
        long jb = static_cast<long>(oa.frame) + entry.offset;
        if (oa.frame < first_a || jb < static_cast<long>(first_b) ||
            jb > static_cast<long>(out_b.size()))
          continue;
        const auto &ob = out_b[static_cast<std::size_t>(jb) - 1];
        for (const auto &[name, va] : oa.values) {
          const auto &vb = ob.values.at(name);
          for (std::size_t k = 0; k < va.size(); ++k)
            dev = std::max(dev, std::abs(va[k] - vb[k]));
        }
        ++count;
      }
      entry.max_deviation = std::max(entry.max_deviation, dev);
      entry.compared_frames = count;
    }
  }

  for (const auto &entry : report.offsets) {
    if (entry.compared_frames < min_overlap)
      continue;
    bool better = entry.max_deviation < report.best_deviation ||
                  (entry.max_deviation == report.best_deviation &&
                   std::abs(entry.offset) < std::abs(report.best_offset));
    if (better) {
      report.best_deviation = entry.max_deviation;
      report.best_offset = entry.offset;
    }
  }
  report.steady_state_equivalent = trials > 0 && report.best_deviation < tolerance;
  return report;
}

} // namespace rollout_lab
