#pragma once

#include <cstdint>
#include <fstream>
#include <limits>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"

#include "rollout_lab/cycles.hpp"
#include "rollout_lab/error.hpp"
#include "rollout_lab/executor.hpp"
#include "rollout_lab/network.hpp"
#include "rollout_lab/pattern.hpp"
#include "rollout_lab/scheduler.hpp"
#include "rollout_lab/tableau.hpp"
#include "rollout_lab/window.hpp"

namespace rollout_lab {

using Json = nlohmann::ordered_json;

inline constexpr int kFormatVersion = 1;

// ---------------------------------------------------------------------------
// Files

inline std::string read_file(const std::string &path) {
  std::ifstream in(path, std::ios::binary);
  if (!in)
    throw Error(ErrorKind::IoError, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string &path, std::string_view content) {
  std::ofstream out(path, std::ios::binary);
  if (!out)
    throw Error(ErrorKind::IoError, "cannot write '" + path + "'");
  out << content;
}

namespace detail {

inline bool valid_name(std::string_view name) {
  if (name.empty())
    return false;
  for (char c : name) {
    bool ok = (c >= 'A' && c <= 'Z') || (c >= 'a' && c <= 'z') ||
              (c >= '0' && c <= '9') || c == '_';
    if (!ok)
      return false;
  }
  return true;
}

inline Json parse_json(std::string_view text) {
  try {
    return Json::parse(text);
  } catch (const nlohmann::json::parse_error &err) {
    std::size_t line = 1;
    std::size_t column = 1;
    for (std::size_t i = 0; i + 1 < err.byte && i < text.size(); ++i) {
      if (text[i] == '\n') {
        ++line;
        column = 1;
      } else {
        ++column;
      }
    }
    throw ParseError("malformed JSON", line, column);
  }
}

// JSON shape errors have no line information.
[[noreturn]] inline void bad_shape(const std::string &what) {
  throw ParseError(what, 0, 0);
}

template <typename F> auto with_json_shape(F &&f) -> decltype(f()) {
  try {
    return f();
  } catch (const nlohmann::json::exception &err) {
    bad_shape(std::string("unexpected JSON structure: ") + err.what());
  }
}

inline void check_version(const Json &j) {
  if (j.is_object() && j.contains("format_version") &&
      j["format_version"] != kFormatVersion)
    bad_shape("unsupported format_version");
}

} // namespace detail

// ---------------------------------------------------------------------------
// Networks

/// Line-oriented network text: `node <name>`, `edge <src> <tgt>`, `#` comments.
/// Duplicate nodes and edges are rejected here; undeclared endpoints are left
/// for validate_network to report.
inline NetworkDescription parse_network_text(std::string_view text) {
  NetworkDescription desc;
  std::set<NodeId> nodes;
  std::set<std::pair<NodeId, NodeId>> edges;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos)
      end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    ++line_no;
    if (auto hash = line.find('#'); hash != std::string_view::npos)
      line = line.substr(0, hash);

    struct Token {
      std::string_view text;
      std::size_t column;
    };
    std::vector<Token> tokens;
    for (std::size_t i = 0; i < line.size();) {
      if (line[i] == ' ' || line[i] == '\t' || line[i] == '\r') {
        ++i;
        continue;
      }
      std::size_t start = i;
      while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r')
        ++i;
      tokens.push_back({line.substr(start, i - start), start + 1});
    }

    if (!tokens.empty()) {
      auto check_name = [&](const Token &t) {
        if (!detail::valid_name(t.text))
          throw ParseError("invalid node name '" + std::string(t.text) + "'", line_no,
                           t.column);
      };
      const auto &kw = tokens.front();
      if (kw.text == "node") {
        if (tokens.size() != 2)
          throw ParseError("expected 'node <name>'", line_no, kw.column);
        check_name(tokens[1]);
        std::string name(tokens[1].text);
        if (!nodes.insert(name).second)
          throw ParseError("duplicate node '" + name + "'", line_no, tokens[1].column);
        desc.nodes.push_back(name);
      } else if (kw.text == "edge") {
        if (tokens.size() != 3)
          throw ParseError("expected 'edge <src> <tgt>'", line_no, kw.column);
        check_name(tokens[1]);
        check_name(tokens[2]);
        std::pair<NodeId, NodeId> e{std::string(tokens[1].text), std::string(tokens[2].text)};
        if (!edges.insert(e).second)
          throw ParseError("duplicate edge " + e.first + "->" + e.second, line_no,
                           kw.column);
        desc.edges.push_back(std::move(e));
      } else {
        throw ParseError("unknown directive '" + std::string(kw.text) + "'", line_no,
                         kw.column);
      }
    }
    pos = end + 1;
  }
  return desc;
}

inline NetworkDescription parse_network_json(std::string_view text) {
  Json j = detail::parse_json(text);
  return detail::with_json_shape([&] {
    detail::check_version(j);
    NetworkDescription desc;
    for (const auto &n : j.at("nodes")) {
      auto name = n.get<std::string>();
      if (!detail::valid_name(name))
        detail::bad_shape("invalid node name '" + name + "'");
      desc.nodes.push_back(name);
    }
    for (const auto &e : j.at("edges")) {
      if (!e.is_array() || e.size() != 2)
        detail::bad_shape("edges must be [source, target] pairs");
      desc.edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>());
    }
    return desc;
  });
}

/// JSON if the text starts with '{', the line format otherwise.
inline NetworkDescription parse_network(std::string_view text) {
  auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{')
    return parse_network_json(text);
  return parse_network_text(text);
}

inline std::string network_to_text(const Network &net) {
  std::string out;
  for (const auto &n : net.nodes())
    out += "node " + n + "\n";
  for (const auto &e : net.edges())
    out += "edge " + net.name(e.source) + " " + net.name(e.target) + "\n";
  return out;
}

inline Json network_to_json(const Network &net) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["nodes"] = net.nodes();
  Json edges = Json::array();
  for (const auto &e : net.edges())
    edges.push_back({net.name(e.source), net.name(e.target)});
  j["edges"] = std::move(edges);
  return j;
}

// ---------------------------------------------------------------------------
// Patterns

inline Json pattern_to_json(const Network &net, const RolloutPattern &pattern) {
  check_domain(net, pattern);
  Json edges = Json::object();
  for (EdgeIndex e = 0; e < net.edge_count(); ++e)
    edges[net.edge_label(e)] = pattern[e];
  Json j;
  j["format_version"] = kFormatVersion;
  j["edges"] = std::move(edges);
  return j;
}

inline RolloutPattern parse_pattern_json(const Network &net, std::string_view text) {
  Json j = detail::parse_json(text);
  std::map<std::string, int> values = detail::with_json_shape([&] {
    detail::check_version(j);
    std::map<std::string, int> out;
    for (const auto &[key, value] : j.at("edges").items()) {
      if (!value.is_number_integer())
        detail::bad_shape("edge '" + key + "' must map to 0 or 1");
      if (!out.emplace(key, value.get<int>()).second)
        detail::bad_shape("edge '" + key + "' listed twice");
    }
    return out;
  });
  return RolloutPattern::from_assignment(net, values);
}

// ---------------------------------------------------------------------------
// Graphviz

/// Window as DOT: one cluster per frame, streaming edges solid, sequential
/// edges dashed, inert frame-0 edges grey. With a tableau, each node shows its
/// value.
inline std::string window_to_dot(const RolloutWindow &window,
                                 const InferenceTableau *tableau = nullptr) {
  const auto &net = window.network();
  auto node_id = [&](WindowNodeId v) {
    auto wn = window.node(v);
    return "\"f" + std::to_string(wn.frame) + "_" + net.name(wn.node) + "\"";
  };
  std::ostringstream os;
  os << "digraph rollout_window {\n";
  os << "  rankdir=LR;\n";
  os << "  node [shape=circle];\n";
  for (std::size_t i = 0; i < window.frame_count(); ++i) {
    os << "  subgraph cluster_frame_" << i << " {\n";
    os << "    label=\"frame " << i << "\";\n";
    for (NodeIndex v = 0; v < net.node_count(); ++v) {
      WindowNodeId id = window.id(i, v);
      os << "    " << node_id(id) << " [label=\"" << net.name(v);
      if (tableau)
        os << "\\n" << tableau->steps.at(id);
      os << "\"";
      if (window.is_initial(id))
        os << ", style=filled, fillcolor=\"#dddddd\"";
      os << "];\n";
    }
    os << "  }\n";
  }
  for (const auto &e : window.edges()) {
    os << "  " << node_id(e.source) << " -> " << node_id(e.target) << " [";
    if (e.inert)
      os << "style=dashed, color=grey";
    else if (window.pattern()[e.network_edge] == 1)
      os << "style=solid, color=red";
    else
      os << "style=dashed, color=blue";
    os << "];\n";
  }
  os << "}\n";
  return os.str();
}

inline std::string network_to_dot(const Network &net) {
  std::ostringstream os;
  os << "digraph network {\n";
  for (const auto &n : net.nodes())
    os << "  \"" << n << "\";\n";
  for (const auto &e : net.edges())
    os << "  \"" << net.name(e.source) << "\" -> \"" << net.name(e.target) << "\";\n";
  os << "}\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// Reports

inline Json count_to_json(const BigCount &value) {
  if (value <= std::numeric_limits<std::uint64_t>::max())
    return Json(value.convert_to<std::uint64_t>());
  return Json(value.str());
}

inline Json validation_to_json(const ValidationReport &report) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["valid"] = report.valid();
  Json list = Json::array();
  for (const auto &v : report.violations) {
    Json item;
    item["kind"] = std::string(violation_name(v.kind));
    item["nodes"] = v.nodes;
    Json edges = Json::array();
    for (const auto &[s, t] : v.edges)
      edges.push_back({s, t});
    item["edges"] = std::move(edges);
    list.push_back(std::move(item));
  }
  j["violations"] = std::move(list);
  return j;
}

inline Json path_to_json(const Network &net, const Path &p) {
  return Json(p.node_names(net));
}

inline Json edge_list_to_json(const Network &net, const std::vector<EdgeIndex> &edges) {
  Json out = Json::array();
  for (EdgeIndex e : edges)
    out.push_back(net.edge_label(e));
  return out;
}

inline Json cycle_analysis_to_json(const Network &net, const CycleAnalysis &a) {
  Json j;
  j["recurrent_edges"] = edge_list_to_json(net, a.recurrent_edges);
  j["forward_edges"] = edge_list_to_json(net, a.forward_edges);
  Json cycles = Json::array();
  for (const auto &p : a.minimal_cycles)
    cycles.push_back(path_to_json(net, p));
  j["minimal_cycles"] = std::move(cycles);
  Json disjoint = Json::array();
  for (const auto &p : a.disjoint_cycle_set)
    disjoint.push_back(path_to_json(net, p));
  j["disjoint_cycle_set"] = std::move(disjoint);
  return j;
}

inline Json lemma1_to_json(const Lemma1Bounds &b) {
  Json j;
  j["lower_forward"] = count_to_json(b.lower_forward);
  j["lower_cycle"] = count_to_json(b.lower_cycle);
  j["lower"] = count_to_json(b.lower);
  j["upper"] = count_to_json(b.upper);
  j["exact_count"] = b.exact_count ? count_to_json(*b.exact_count) : Json(nullptr);
  return j;
}

inline Json window_node_to_json(const RolloutWindow &w, WindowNodeId v) {
  return Json(w.label(v));
}

inline Json tableau_to_json(const RolloutWindow &window, const InferenceTableau &t) {
  Json steps = Json::object();
  for (WindowNodeId v = 0; v < window.node_count(); ++v)
    steps[window.label(v)] = t.steps[v];
  Json j;
  j["format_version"] = kFormatVersion;
  j["window_size"] = t.window_size;
  j["steps"] = std::move(steps);
  return j;
}

inline Json theorem1_to_json(const Theorem1Report &r) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["a_equally_parallel"] = r.a_equally_parallel;
  j["b_factor_one"] = r.b_factor_one;
  j["c_frame_i_at_step_i"] = r.c_frame_i_at_step_i;
  j["d_pointwise_minimal"] =
      r.d_mode == MinimalityMode::Skipped ? Json(nullptr) : Json(r.d_pointwise_minimal);
  j["d_mode"] = std::string(minimality_mode_name(r.d_mode));
  j["consistent"] = r.consistent;
  return j;
}

inline Json profile_to_json(const RolloutWindow &w, const ParallelismProfile &p) {
  Json steps = Json::array();
  for (std::size_t k = 0; k < p.per_step.size(); ++k) {
    Json nodes = Json::array();
    for (auto v : p.per_step[k])
      nodes.push_back(w.label(v));
    steps.push_back({{"step", k + 1}, {"nodes", std::move(nodes)}});
  }
  Json initial = Json::array();
  for (auto v : p.initial)
    initial.push_back(w.label(v));
  Json j;
  j["initial"] = std::move(initial);
  j["per_step_updates"] = std::move(steps);
  return j;
}

inline Json makespan_to_json(const RolloutWindow &w, const MakespanReport &r) {
  Json path = Json::array();
  for (auto v : r.critical_path)
    path.push_back(w.label(v));
  Json j;
  j["total_time"] = r.total_time;
  j["critical_path"] = std::move(path);
  j["per_frame_time"] = r.per_frame_time;
  j["parallel_limit"] = r.parallel_limit ? Json(*r.parallel_limit) : Json(nullptr);
  j["policy"] = r.heuristic ? "greedy list scheduling (heuristic, not optimal)"
                            : "unbounded parallelism (exact)";
  return j;
}

inline Json response_to_json(const ResponseProfile &r) {
  Json list = Json::array();
  for (const auto &resp : r.responses)
    list.push_back({{"step", resp.step}, {"frame", resp.frame}, {"samples", resp.samples}});
  Json j;
  j["format_version"] = kFormatVersion;
  j["first_response_step"] =
      r.first_response_step ? Json(*r.first_response_step) : Json(nullptr);
  j["sampling_period"] = r.sampling_period;
  j["responses"] = std::move(list);
  return j;
}

inline Json dsr_sweep_to_json(const std::vector<DsrSweepRow> &rows) {
  Json list = Json::array();
  for (const auto &r : rows) {
    list.push_back({{"k", r.k},
                    {"shortest_path", r.shortest_path},
                    {"longest_path", r.longest_path},
                    {"streaming_first", r.streaming_first},
                    {"sequential_first", r.sequential_first},
                    {"difference", r.difference}});
  }
  Json j;
  j["format_version"] = kFormatVersion;
  j["rows"] = std::move(list);
  return j;
}

inline std::string dsr_sweep_to_csv(const std::vector<DsrSweepRow> &rows) {
  std::string out = "k,streaming_first,sequential_first,difference\n";
  for (const auto &r : rows) {
    out += std::to_string(r.k) + "," + std::to_string(r.streaming_first) + "," +
           std::to_string(r.sequential_first) + "," + std::to_string(r.difference) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Numeric specs, inputs, traces

inline Json numeric_spec_to_json(const NumericSpec &spec) {
  Json j;
  j["format_version"] = kFormatVersion;
  j["activation"] = std::string(activation_name(spec.activation));
  Json dims = Json::object();
  for (const auto &[n, d] : spec.dims)
    dims[n] = d;
  j["dims"] = std::move(dims);
  Json edges = Json::object();
  for (const auto &[key, m] : spec.edge_params) {
    Json rows = Json::array();
    for (std::size_t r = 0; r < m.rows; ++r) {
      Json row = Json::array();
      for (std::size_t c = 0; c < m.cols; ++c)
        row.push_back(m.at(r, c));
      rows.push_back(std::move(row));
    }
    edges[key.first + "->" + key.second] = std::move(rows);
  }
  j["edges"] = std::move(edges);
  Json biases = Json::object();
  for (const auto &[n, b] : spec.node_bias)
    biases[n] = b;
  j["biases"] = std::move(biases);
  return j;
}

inline NumericSpec parse_numeric_spec(std::string_view text) {
  Json j = detail::parse_json(text);
  return detail::with_json_shape([&] {
    detail::check_version(j);
    NumericSpec spec;
    spec.activation = parse_activation(j.value("activation", std::string("identity")));
    for (const auto &[n, d] : j.at("dims").items())
      spec.dims[n] = d.get<std::size_t>();
    for (const auto &[key, rows] : j.at("edges").items()) {
      auto arrow = key.find("->");
      if (arrow == std::string::npos)
        detail::bad_shape("bad edge key '" + key + "'");
      Matrix m;
      m.rows = rows.size();
      for (const auto &row : rows) {
        if (m.cols == 0)
          m.cols = row.size();
        if (row.size() != m.cols)
          detail::bad_shape("ragged matrix for edge '" + key + "'");
        for (const auto &x : row)
          m.values.push_back(x.get<double>());
      }
      spec.edge_params[{key.substr(0, arrow), key.substr(arrow + 2)}] = std::move(m);
    }
    if (j.contains("biases")) {
      for (const auto &[n, b] : j.at("biases").items())
        spec.node_bias[n] = b.get<std::vector<double>>();
    }
    return spec;
  });
}

/// Input sequences: a JSON array with one {node: vector} object per frame, or
/// an object whose "frames" member is such an array.
inline std::vector<NodeValues> parse_inputs(std::string_view text) {
  Json j = detail::parse_json(text);
  return detail::with_json_shape([&] {
    detail::check_version(j);
    const Json &frames = j.is_array() ? j : j.at("frames");
    std::vector<NodeValues> out;
    for (const auto &frame : frames) {
      NodeValues values;
      for (const auto &[n, x] : frame.items())
        values[n] = x.get<std::vector<double>>();
      out.push_back(std::move(values));
    }
    return out;
  });
}

inline Json stream_to_json(const std::vector<StreamOutput> &outputs) {
  Json list = Json::array();
  for (const auto &o : outputs) {
    Json values = Json::object();
    for (const auto &[n, x] : o.values)
      values[n] = x;
    list.push_back({{"step", o.step}, {"frame", o.frame}, {"values", std::move(values)}});
  }
  Json j;
  j["format_version"] = kFormatVersion;
  j["outputs"] = std::move(list);
  return j;
}

inline Json window_trace_to_json(const RolloutWindow &w, const ExecutionTrace &trace) {
  Json states = Json::object();
  for (WindowNodeId v = 0; v < w.node_count(); ++v) {
    auto wn = w.node(v);
    states[w.label(v)] = trace.at(wn.frame, wn.node);
  }
  Json order = Json::array();
  for (const auto &[step, wn] : trace.update_order)
    order.push_back({{"step", step}, {"node", w.label(w.id(wn.frame, wn.node))}});
  Json j;
  j["format_version"] = kFormatVersion;
  j["window_size"] = w.window_size();
  j["frame_states"] = std::move(states);
  j["update_order"] = std::move(order);
  return j;
}

inline Json comparison_to_json(const ComparisonReport &r) {
  Json offsets = Json::array();
  for (const auto &o : r.offsets) {
    offsets.push_back({{"offset", o.offset},
                       {"max_deviation", o.max_deviation},
                       {"compared_frames", o.compared_frames}});
  }
  Json j;
  j["format_version"] = kFormatVersion;
  j["offsets"] = std::move(offsets);
  j["best_offset"] = r.best_offset;
  j["best_deviation"] = std::isfinite(r.best_deviation) ? Json(r.best_deviation) : Json(nullptr);
  j["verdict"] = r.steady_state_equivalent ? "steady-state equivalent" : "behaviorally distinct";
  return j;
}

inline CostModel parse_costs(std::string_view text) {
  Json j = detail::parse_json(text);
  return detail::with_json_shape([&] {
    detail::check_version(j);
    CostModel m;
    m.fallback = j.contains("default") ? std::optional<double>(j["default"].get<double>())
                                       : std::nullopt;
    for (const auto &[n, c] : j.at("node_cost").items())
      m.node_cost[n] = c.get<double>();
    return m;
  });
}

} // namespace rollout_lab
