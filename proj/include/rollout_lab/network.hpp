#pragma once

#include <algorithm>
#include <compare>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "rollout_lab/error.hpp"

namespace rollout_lab {

using NodeId = std::string;
using NodeIndex = std::size_t;
using EdgeIndex = std::size_t;

/// An edge between two nodes of a Network, by node index. Nodes are indexed in
/// lexicographic name order, so ordering edges by (source, target) index is the
/// canonical edge order used everywhere.
struct Edge {
  NodeIndex source = 0;
  NodeIndex target = 0;

  bool is_self_loop() const noexcept { return source == target; }
  auto operator<=>(const Edge &) const = default;
};

/// Unchecked, name-based network description as it comes out of a parser or
/// is built by hand. Network::create turns it into a checked Network.
struct NetworkDescription {
  std::vector<NodeId> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;
};

enum class ViolationKind {
  EmptyEdgeSet,
  DuplicateNode,
  DuplicateEdge,
  UndeclaredEndpoint,
  NoInputNode,
  NotInputConnected,
};

constexpr std::string_view violation_name(ViolationKind kind) {
  switch (kind) {
  case ViolationKind::EmptyEdgeSet: return "EmptyEdgeSet";
  case ViolationKind::DuplicateNode: return "DuplicateNode";
  case ViolationKind::DuplicateEdge: return "DuplicateEdge";
  case ViolationKind::UndeclaredEndpoint: return "UndeclaredEndpoint";
  case ViolationKind::NoInputNode: return "NoInputNode";
  case ViolationKind::NotInputConnected: return "NotInputConnected";
  }
  return "Unknown";
}

struct Violation {
  ViolationKind kind;
  std::vector<NodeId> nodes;
  std::vector<std::pair<NodeId, NodeId>> edges;
};

struct ValidationReport {
  std::vector<Violation> violations;

  bool valid() const noexcept { return violations.empty(); }
  bool has(ViolationKind kind) const {
    return std::any_of(violations.begin(), violations.end(),
                       [kind](const Violation &v) { return v.kind == kind; });
  }
};

/// Checks every clause of the network definition: at least one edge, a simple
/// graph over declared nodes, and every node reachable from an input node
/// (a node without incoming edges). Violations are reported, never thrown.
inline ValidationReport validate_network(const NetworkDescription &desc) {
  ValidationReport report;

  std::map<NodeId, NodeIndex> index;
  {
    std::set<NodeId> dups;
    for (const auto &name : desc.nodes) {
      if (!index.emplace(name, 0).second)
        dups.insert(name);
    }
    if (!dups.empty())
      report.violations.push_back(
          {ViolationKind::DuplicateNode, {dups.begin(), dups.end()}, {}});
    NodeIndex i = 0;
    for (auto &[name, idx] : index)
      idx = i++;
  }

  if (desc.edges.empty())
    report.violations.push_back({ViolationKind::EmptyEdgeSet, {}, {}});

  std::set<std::pair<NodeId, NodeId>> seen;
  std::set<std::pair<NodeId, NodeId>> duplicate;
  std::set<std::pair<NodeId, NodeId>> undeclared;
  std::set<NodeId> undeclared_nodes;
  std::vector<std::vector<NodeIndex>> succ(index.size());
  std::vector<bool> has_in(index.size(), false);
  for (const auto &e : desc.edges) {
    auto s = index.find(e.first);
    auto t = index.find(e.second);
    if (s == index.end() || t == index.end()) {
      undeclared.insert(e);
      if (s == index.end())
        undeclared_nodes.insert(e.first);
      if (t == index.end())
        undeclared_nodes.insert(e.second);
      continue;
    }
    if (!seen.insert(e).second) {
      duplicate.insert(e);
      continue;
    }
    succ[s->second].push_back(t->second);
    has_in[t->second] = true;
  }
  if (!duplicate.empty())
    report.violations.push_back(
        {ViolationKind::DuplicateEdge, {}, {duplicate.begin(), duplicate.end()}});
  if (!undeclared.empty())
    report.violations.push_back({ViolationKind::UndeclaredEndpoint,
                                 {undeclared_nodes.begin(), undeclared_nodes.end()},
                                 {undeclared.begin(), undeclared.end()}});

  std::vector<NodeIndex> stack;
  std::vector<bool> reached(index.size(), false);
  for (NodeIndex v = 0; v < index.size(); ++v) {
    if (!has_in[v]) {
      reached[v] = true;
      stack.push_back(v);
    }
  }
  if (stack.empty() && !index.empty())
    report.violations.push_back({ViolationKind::NoInputNode, {}, {}});
  while (!stack.empty()) {
    NodeIndex u = stack.back();
    stack.pop_back();
    for (NodeIndex v : succ[u]) {
      if (!reached[v]) {
        reached[v] = true;
        stack.push_back(v);
      }
    }
  }
  std::vector<NodeId> unreached;
  for (const auto &[name, idx] : index) {
    if (!reached[idx])
      unreached.push_back(name);
  }
  if (!unreached.empty())
    report.violations.push_back(
        {ViolationKind::NotInputConnected, std::move(unreached), {}});
  return report;
}

inline std::string describe(const ValidationReport &report) {
  std::string out;
  for (const auto &v : report.violations) {
    if (!out.empty())
      out += "; ";
    out += violation_name(v.kind);
    std::string detail;
    for (const auto &n : v.nodes)
      detail += (detail.empty() ? "" : ",") + n;
    for (const auto &[s, t] : v.edges)
      detail += (detail.empty() ? "" : ",") + s + "->" + t;
    if (!detail.empty())
      out += "(" + detail + ")";
  }
  return out;
}

/// A directed, input-connected, simple graph with at least one edge. Immutable
/// once created; all iteration orders are canonical (lexicographic by name).
class Network {
public:
  static Network create(const NetworkDescription &desc) {
    auto report = validate_network(desc);
    if (!report.valid())
      throw Error(ErrorKind::InvalidNetwork, describe(report));

    Network net;
    net.names_ = desc.nodes;
    std::sort(net.names_.begin(), net.names_.end());
    for (const auto &[s, t] : desc.edges)
      net.edges_.push_back({*net.find_node(s), *net.find_node(t)});
    std::sort(net.edges_.begin(), net.edges_.end());

    net.out_.resize(net.names_.size());
    net.in_.resize(net.names_.size());
    for (EdgeIndex e = 0; e < net.edges_.size(); ++e) {
      net.out_[net.edges_[e].source].push_back(e);
      net.in_[net.edges_[e].target].push_back(e);
    }
    net.is_input_.assign(net.names_.size(), false);
    for (NodeIndex v = 0; v < net.names_.size(); ++v) {
      if (net.in_[v].empty()) {
        net.inputs_.push_back(v);
        net.is_input_[v] = true;
      }
    }
    return net;
  }

  std::size_t node_count() const noexcept { return names_.size(); }
  std::size_t edge_count() const noexcept { return edges_.size(); }
  const std::vector<NodeId> &nodes() const noexcept { return names_; }
  const std::vector<Edge> &edges() const noexcept { return edges_; }
  const Edge &edge(EdgeIndex e) const { return edges_.at(e); }
  const NodeId &name(NodeIndex v) const { return names_.at(v); }

  std::optional<NodeIndex> find_node(std::string_view name) const {
    auto it = std::lower_bound(names_.begin(), names_.end(), name);
    if (it == names_.end() || *it != name)
      return std::nullopt;
    return static_cast<NodeIndex>(it - names_.begin());
  }

  NodeIndex node_index(std::string_view name) const {
    if (auto v = find_node(name))
      return *v;
    throw Error(ErrorKind::DomainMismatch,
                "unknown node '" + std::string(name) + "'");
  }

  std::optional<EdgeIndex> find_edge(NodeIndex source, NodeIndex target) const {
    Edge key{source, target};
    auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
    if (it == edges_.end() || *it != key)
      return std::nullopt;
    return static_cast<EdgeIndex>(it - edges_.begin());
  }

  /// Edge indices leaving / entering a node, in canonical edge order.
  const std::vector<EdgeIndex> &out_edges(NodeIndex v) const { return out_.at(v); }
  const std::vector<EdgeIndex> &in_edges(NodeIndex v) const { return in_.at(v); }

  /// Input nodes: nodes without incoming edges.
  const std::vector<NodeIndex> &inputs() const noexcept { return inputs_; }
  bool is_input(NodeIndex v) const { return is_input_.at(v); }

  std::string edge_label(EdgeIndex e) const {
    return names_[edges_.at(e).source] + "->" + names_[edges_.at(e).target];
  }

  NetworkDescription description() const {
    NetworkDescription desc{names_, {}};
    for (const auto &e : edges_)
      desc.edges.emplace_back(names_[e.source], names_[e.target]);
    return desc;
  }

  bool operator==(const Network &other) const {
    return names_ == other.names_ && edges_ == other.edges_;
  }

private:
  Network() = default;

  std::vector<NodeId> names_;
  std::vector<Edge> edges_;
  std::vector<std::vector<EdgeIndex>> out_;
  std::vector<std::vector<EdgeIndex>> in_;
  std::vector<NodeIndex> inputs_;
  std::vector<bool> is_input_;
};

/// Names of the input nodes of a network.
inline std::set<NodeId> input_nodes(const Network &net) {
  std::set<NodeId> out;
  for (NodeIndex v : net.inputs())
    out.insert(net.name(v));
  return out;
}

/// Same query on an unchecked description (endpoints must be declared).
inline std::set<NodeId> input_nodes(const NetworkDescription &desc) {
  std::set<NodeId> out(desc.nodes.begin(), desc.nodes.end());
  for (const auto &[s, t] : desc.edges)
    out.erase(t);
  return out;
}

/// Convenience for tests and generators: nodes are the union of the edge
/// endpoints plus any extra names given.
inline Network make_network(const std::vector<std::pair<NodeId, NodeId>> &edges,
                            const std::vector<NodeId> &extra_nodes = {}) {
  std::set<NodeId> names(extra_nodes.begin(), extra_nodes.end());
  for (const auto &[s, t] : edges) {
    names.insert(s);
    names.insert(t);
  }
  return Network::create({{names.begin(), names.end()}, edges});
}

/// A sequence of edges with matching consecutive endpoints.
struct Path {
  std::vector<EdgeIndex> edges;

  std::size_t length() const noexcept { return edges.size(); }

  bool is_cycle(const Network &net) const {
    return !edges.empty() &&
           net.edge(edges.back()).target == net.edge(edges.front()).source;
  }

  /// Minimal iff no edge is used twice.
  bool is_minimal() const {
    std::vector<EdgeIndex> sorted = edges;
    std::sort(sorted.begin(), sorted.end());
    return std::adjacent_find(sorted.begin(), sorted.end()) == sorted.end();
  }

  bool is_well_formed(const Network &net) const {
    if (edges.empty())
      return false;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
      if (net.edge(edges[i]).target != net.edge(edges[i + 1]).source)
        return false;
    }
    return true;
  }

  std::vector<NodeId> node_names(const Network &net) const {
    std::vector<NodeId> out;
    for (EdgeIndex e : edges)
      out.push_back(net.name(net.edge(e).source));
    if (!edges.empty() && !is_cycle(net))
      out.push_back(net.name(net.edge(edges.back()).target));
    return out;
  }

  bool operator==(const Path &) const = default;
};

} // namespace rollout_lab
