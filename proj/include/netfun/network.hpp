#pragma once

#include <algorithm>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netfun/error.hpp"
#include "netfun/rational.hpp"

namespace netfun {

using NodeId = int;
using EdgeId = int;

struct Edge {
  NodeId u = 0;
  NodeId v = 0;
  Rational cap;
  bool directed = false;
};

// A usable direction of an edge. Arc index 2e is u->v, 2e+1 is v->u;
// directed edges only own the first.
struct Arc {
  NodeId from = 0;
  NodeId to = 0;
  EdgeId edge = 0;
  int index = 0;
};

inline int arc_index(EdgeId e, bool reverse) { return 2 * e + (reverse ? 1 : 0); }

// Capacitated communication network with designated sources s_1..s_k and a
// single terminal. Immutable once built.
class Network {
 public:
  Network() = default;

  Network(int num_nodes, std::vector<Edge> edges, std::vector<NodeId> sources,
          NodeId terminal, std::vector<std::string> names = {})
      : num_nodes_(num_nodes),
        edges_(std::move(edges)),
        sources_(std::move(sources)),
        terminal_(terminal),
        names_(std::move(names)) {
    if (names_.empty()) {
      for (int i = 0; i < num_nodes_; ++i) names_.push_back(std::to_string(i));
    }
    out_.assign(num_nodes_ > 0 ? num_nodes_ : 0, {});
    in_.assign(num_nodes_ > 0 ? num_nodes_ : 0, {});
    neighbors_.assign(num_nodes_ > 0 ? num_nodes_ : 0, {});
    for (EdgeId e = 0; e < static_cast<EdgeId>(edges_.size()); ++e) {
      const Edge& edge = edges_[e];
      if (!in_range(edge.u) || !in_range(edge.v)) continue;
      add_arc(Arc{edge.u, edge.v, e, arc_index(e, false)});
      if (!edge.directed) add_arc(Arc{edge.v, edge.u, e, arc_index(e, true)});
      if (edge.u != edge.v) {
        neighbors_[edge.u].push_back(edge.v);
        neighbors_[edge.v].push_back(edge.u);
      }
    }
    for (auto& list : neighbors_) {
      std::sort(list.begin(), list.end());
      list.erase(std::unique(list.begin(), list.end()), list.end());
    }
    for (auto& list : out_) {
      std::sort(list.begin(), list.end(),
                [](const Arc& a, const Arc& b) { return a.to < b.to; });
    }
    for (auto& list : in_) {
      std::sort(list.begin(), list.end(),
                [](const Arc& a, const Arc& b) { return a.from < b.from; });
    }
  }

  int num_nodes() const { return num_nodes_; }
  int num_edges() const { return static_cast<int>(edges_.size()); }
  int num_arc_slots() const { return 2 * num_edges(); }
  int kappa() const { return static_cast<int>(sources_.size()); }

  const std::vector<Edge>& edges() const { return edges_; }
  const Edge& edge(EdgeId e) const { return edges_.at(e); }
  const std::vector<NodeId>& sources() const { return sources_; }
  NodeId source(int l) const { return sources_.at(l); }
  NodeId terminal() const { return terminal_; }
  const std::vector<std::string>& names() const { return names_; }
  const std::string& name(NodeId v) const { return names_.at(v); }

  // Arcs along which v may send / receive.
  const std::vector<Arc>& out_arcs(NodeId v) const { return out_.at(v); }
  const std::vector<Arc>& in_arcs(NodeId v) const { return in_.at(v); }
  // Neighbors in the underlying undirected graph, ascending.
  const std::vector<NodeId>& neighbors(NodeId v) const { return neighbors_.at(v); }

  bool in_range(NodeId v) const { return v >= 0 && v < num_nodes_; }

  // The arc carrying data from `from` to `to`, if the link permits it.
  std::optional<Arc> arc_between(NodeId from, NodeId to) const {
    if (!in_range(from) || !in_range(to)) return std::nullopt;
    for (const Arc& a : out_[from]) {
      if (a.to == to) return a;
    }
    return std::nullopt;
  }

  std::optional<NodeId> find_node(const std::string& name) const {
    for (NodeId v = 0; v < num_nodes_; ++v) {
      if (names_[v] == name) return v;
    }
    return std::nullopt;
  }

  bool is_arc_slot_used(int arc) const {
    return (arc % 2 == 0) || !edges_.at(arc / 2).directed;
  }

  Arc arc(int index) const {
    const Edge& e = edges_.at(index / 2);
    if (index % 2 == 0) return Arc{e.u, e.v, index / 2, index};
    return Arc{e.v, e.u, index / 2, index};
  }

  std::vector<Rational> capacities() const {
    std::vector<Rational> caps;
    caps.reserve(edges_.size());
    for (const Edge& e : edges_) caps.push_back(e.cap);
    return caps;
  }

 private:
  void add_arc(const Arc& a) {
    out_[a.from].push_back(a);
    in_[a.to].push_back(a);
  }

  int num_nodes_ = 0;
  std::vector<Edge> edges_;
  std::vector<NodeId> sources_;
  NodeId terminal_ = 0;
  std::vector<std::string> names_;
  std::vector<std::vector<Arc>> out_;
  std::vector<std::vector<Arc>> in_;
  std::vector<std::vector<NodeId>> neighbors_;
};

// Default capacity of the link joining a split source node to its host.
inline Rational default_colocated_capacity() { return Rational(1000000000); }

inline Status validate_network(const Network& net) {
  const int n = net.num_nodes();
  if (n <= 0) return Status::fail(ErrorCode::kDisconnected, "network has no nodes");
  std::set<std::pair<NodeId, NodeId>> seen;
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    const Edge& edge = net.edge(e);
    if (!net.in_range(edge.u) || !net.in_range(edge.v)) {
      return Status::fail(ErrorCode::kUnknownNode,
                          "edge " + std::to_string(e) + " references an unknown node");
    }
    if (edge.u == edge.v) {
      return Status::fail(ErrorCode::kSelfLoop,
                          "edge " + std::to_string(e) + " is a self-loop at " +
                              net.name(edge.u));
    }
    auto key = std::minmax(edge.u, edge.v);
    if (!seen.insert(key).second) {
      return Status::fail(ErrorCode::kDuplicateEdge,
                          "duplicate edge " + net.name(edge.u) + "-" + net.name(edge.v));
    }
    if (sgn(edge.cap) < 0) {
      return Status::fail(ErrorCode::kNegativeCapacity,
                          "edge " + net.name(edge.u) + "-" + net.name(edge.v) +
                              " has negative capacity " + to_string(edge.cap));
    }
  }
  if (net.kappa() < 1) {
    return Status::fail(ErrorCode::kBadSourceTerminal, "no sources");
  }
  if (!net.in_range(net.terminal())) {
    return Status::fail(ErrorCode::kBadSourceTerminal, "terminal is not a node");
  }
  std::set<NodeId> distinct;
  for (NodeId s : net.sources()) {
    if (!net.in_range(s)) {
      return Status::fail(ErrorCode::kBadSourceTerminal, "source is not a node");
    }
    if (!distinct.insert(s).second) {
      return Status::fail(ErrorCode::kBadSourceTerminal,
                          "source " + net.name(s) + " listed twice");
    }
    if (s == net.terminal()) {
      return Status::fail(ErrorCode::kBadSourceTerminal,
                          "terminal " + net.name(s) + " is also a source");
    }
  }
  std::vector<char> seen_node(n, 0);
  std::queue<NodeId> frontier;
  frontier.push(net.terminal());
  seen_node[net.terminal()] = 1;
  int reached = 1;
  while (!frontier.empty()) {
    NodeId v = frontier.front();
    frontier.pop();
    for (NodeId u : net.neighbors(v)) {
      if (!seen_node[u]) {
        seen_node[u] = 1;
        ++reached;
        frontier.push(u);
      }
    }
  }
  if (reached != n) {
    return Status::fail(ErrorCode::kDisconnected,
                        "only " + std::to_string(reached) + " of " +
                            std::to_string(n) + " nodes are connected to the terminal");
  }
  return Status::success();
}

// Models a second data sequence generated at `host`: a fresh node joined to
// the host by a link of effectively unlimited capacity, which becomes the
// source for that sequence. Returns the new network and the new node id.
inline std::pair<Network, NodeId> attach_colocated_source(
    const Network& net, NodeId host, int source_slot,
    const Rational& link_cap = default_colocated_capacity()) {
  std::vector<Edge> edges = net.edges();
  std::vector<std::string> names = net.names();
  const NodeId fresh = net.num_nodes();
  names.push_back(net.name(host) + "#" + std::to_string(source_slot));
  edges.push_back(Edge{fresh, host, link_cap, false});
  std::vector<NodeId> sources = net.sources();
  sources.at(source_slot) = fresh;
  return {Network(net.num_nodes() + 1, std::move(edges), std::move(sources),
                  net.terminal(), std::move(names)),
          fresh};
}

}  // namespace netfun
