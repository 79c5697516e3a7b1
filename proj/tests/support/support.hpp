#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "netfun/netfun.hpp"

namespace support {

using namespace netfun;

using Rng = std::mt19937_64;

inline int uniform(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

inline Rational random_cap(Rng& rng) {
  static const int dens[] = {1, 1, 2, 3, 4};
  const int den = dens[uniform(rng, 0, 4)];
  const int num = uniform(rng, 1, 3 * den);
  return make_rational(num, den);
}

inline std::string instances_dir() { return NETFUN_INSTANCES_DIR; }

inline Instance load(const std::string& file) { return load_instance(instances_dir() + "/" + file); }

// Random schema over kappa sources: open edges are merged two or three at a
// time into new operator nodes until one remains, which feeds the terminal.
inline ComputationTree random_tree(Rng& rng, int kappa, bool allow_xor) {
  std::vector<TreeNode> nodes;
  std::vector<TreeEdge> edges;
  for (int l = 0; l < kappa; ++l) nodes.push_back({"s" + std::to_string(l), Operator::none()});
  std::vector<int> open_tails;
  for (int l = 0; l < kappa; ++l) open_tails.push_back(l);

  // Edges are labeled after all tails exist, so collect (tail, head) first.
  std::vector<std::pair<int, int>> links;
  std::vector<OpKind> kinds = {OpKind::kAdd, OpKind::kMul, OpKind::kMin, OpKind::kMax};
  if (allow_xor) kinds.push_back(OpKind::kXor);
  while (open_tails.size() > 1) {
    const int take = std::min<int>(static_cast<int>(open_tails.size()), uniform(rng, 2, 3));
    std::shuffle(open_tails.begin(), open_tails.end(), rng);
    const int id = static_cast<int>(nodes.size());
    nodes.push_back({"f" + std::to_string(id), Operator::of(kinds[uniform(rng, 0, static_cast<int>(kinds.size()) - 1)])});
    for (int j = 0; j < take; ++j) {
      links.push_back({open_tails.back(), id});
      open_tails.pop_back();
    }
    open_tails.push_back(id);
  }
  const int root = static_cast<int>(nodes.size());
  nodes.push_back({"out", Operator::none()});
  links.push_back({open_tails[0], root});
  // Label order: by tail id, which is topological since tails are created in order.
  std::stable_sort(links.begin(), links.end());
  for (const auto& [tail, head] : links) {
    edges.push_back({"e" + std::to_string(edges.size()), tail, head});
  }
  return ComputationTree(std::move(nodes), std::move(edges));
}

struct RandomSpec {
  int min_nodes = 3;
  int max_nodes = 8;
  int max_edges = 14;
  int max_kappa = 3;
  double directed_fraction = 0.0;
};

// Connected simple graph with distinct sources and a terminal that is not a
// source.
inline Network random_network(Rng& rng, const RandomSpec& spec, int kappa) {
  const int n = uniform(rng, std::max(spec.min_nodes, kappa + 1), spec.max_nodes);
  const int max_m = std::min(spec.max_edges, n * (n - 1) / 2);
  const int m = uniform(rng, n - 1, max_m);
  std::set<std::pair<int, int>> used;
  std::vector<Edge> edges;
  std::bernoulli_distribution directed(spec.directed_fraction);
  auto add = [&](int u, int v) {
    if (u == v || used.count({std::min(u, v), std::max(u, v)})) return false;
    used.insert({std::min(u, v), std::max(u, v)});
    Edge e;
    e.u = u;
    e.v = v;
    e.cap = random_cap(rng);
    e.directed = directed(rng);
    edges.push_back(e);
    return true;
  };
  std::vector<int> perm(n);
  for (int i = 0; i < n; ++i) perm[i] = i;
  std::shuffle(perm.begin(), perm.end(), rng);
  for (int i = 1; i < n; ++i) add(perm[uniform(rng, 0, i - 1)], perm[i]);
  while (static_cast<int>(edges.size()) < m) add(uniform(rng, 0, n - 1), uniform(rng, 0, n - 1));
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<NodeId> sources(perm.begin(), perm.begin() + kappa);
  return Network(n, std::move(edges), std::move(sources), perm[kappa]);
}

// ---------------------------------------------------------------------------
// Brute force, written without the library's enumeration or usage helpers.

inline std::optional<int> edge_between(const Network& net, NodeId a, NodeId b) {
  for (int e = 0; e < net.num_edges(); ++e) {
    const Edge& x = net.edge(e);
    if (x.u == a && x.v == b) return e;
    if (!x.directed && x.u == b && x.v == a) return e;
  }
  return std::nullopt;
}

inline void simple_paths(const Network& net, NodeId from, NodeId to,
                         std::vector<Path>& out) {
  Path cur{from};
  std::vector<char> on(net.num_nodes(), 0);
  on[from] = 1;
  std::function<void()> go = [&] {
    const NodeId v = cur.back();
    if (v == to) {
      out.push_back(cur);
      return;
    }
    for (NodeId w = 0; w < net.num_nodes(); ++w) {
      if (on[w] || !edge_between(net, v, w)) continue;
      on[w] = 1;
      cur.push_back(w);
      go();
      cur.pop_back();
      on[w] = 0;
    }
  };
  go();
}

// Types are chosen from the last to the first: each type ends where its
// successor starts, and non-source types may start anywhere.
inline std::vector<Embedding> brute_embeddings(const Network& net, const ComputationTree& tree,
                                               std::size_t limit = 2000000) {
  const int g = tree.num_types();
  std::vector<Embedding> out;
  Embedding cur;
  cur.paths.assign(g, {});
  std::function<void(int)> go = [&](int t) {
    if (out.size() > limit) return;
    if (t < 0) {
      out.push_back(cur);
      return;
    }
    NodeId end = net.terminal();
    if (t != g - 1) end = cur.paths[tree.suc(t)[0]].front();
    std::vector<NodeId> starts;
    if (t < tree.kappa()) {
      starts.push_back(net.source(t));
    } else {
      for (NodeId v = 0; v < net.num_nodes(); ++v) starts.push_back(v);
    }
    for (NodeId s : starts) {
      std::vector<Path> ps;
      simple_paths(net, s, end, ps);
      for (const Path& p : ps) {
        cur.paths[t] = p;
        go(t - 1);
      }
    }
  };
  go(g - 1);
  return out;
}

inline std::vector<Rational> brute_usage(const Network& net, const Embedding& b) {
  std::vector<Rational> r(net.num_edges(), Rational(0));
  for (const Path& p : b.paths) {
    for (std::size_t j = 0; j + 1 < p.size(); ++j) r[*edge_between(net, p[j], p[j + 1])] += 1;
  }
  return r;
}

inline Rational brute_weight(const Network& net, const Embedding& b,
                             const std::vector<Rational>& len) {
  Rational w = 0;
  const auto r = brute_usage(net, b);
  for (int e = 0; e < net.num_edges(); ++e) w += r[e] * len[e];
  return w;
}

// Energy of one embedding: compute at every path start, transmit and receive
// per hop. nullopt when a node with a positive load has infinite length.
inline std::optional<Rational> brute_energy_weight(const Network& net, const Embedding& b,
                                                   const EnergyModel& em,
                                                   const std::vector<std::optional<Rational>>& l) {
  std::vector<Rational> load(net.num_nodes(), Rational(0));
  for (int t = 0; t < static_cast<int>(b.paths.size()); ++t) {
    const Path& p = b.paths[t];
    load[p[0]] += em.compute[t];
    for (std::size_t j = 1; j < p.size(); ++j) {
      load[p[j - 1]] += em.transmit[t];
      load[p[j]] += em.receive[t];
    }
  }
  Rational w = 0;
  for (NodeId u = 0; u < net.num_nodes(); ++u) {
    if (sgn(load[u]) == 0) continue;
    if (!l[u]) return std::nullopt;
    w += load[u] * *l[u];
  }
  return w;
}

// Ground truth for one realization, evaluated from the root down.
inline Symbol direct_value(const ComputationTree& tree, const std::vector<Symbol>& src, Symbol q) {
  std::function<Symbol(int)> node_value = [&](int node) -> Symbol {
    if (node < tree.kappa()) return src[node];
    std::vector<Symbol> in;
    for (const TreeEdge& e : tree.edges()) {
      if (e.head == node) in.push_back(node_value(e.tail));
    }
    const Operator& op = tree.node(node).op;
    std::uint64_t acc = 0;
    switch (op.kind) {
      case OpKind::kAdd:
        for (Symbol s : in) acc += s;
        return static_cast<Symbol>(acc % q);
      case OpKind::kMul:
        acc = 1;
        for (Symbol s : in) acc = acc * s % q;
        return static_cast<Symbol>(acc % q);
      case OpKind::kXor:
        for (Symbol s : in) acc ^= s;
        return static_cast<Symbol>(acc);
      case OpKind::kMin:
        return *std::min_element(in.begin(), in.end());
      case OpKind::kMax:
        return *std::max_element(in.begin(), in.end());
      default:
        return in.at(0);
    }
  };
  // The terminal node just forwards its single input.
  return node_value(tree.edge(tree.final_type()).tail);
}

// ---------------------------------------------------------------------------
// Enumerable random instances.

struct RandomInstance {
  Network net;
  ComputationTree tree;
  std::size_t embeddings = 0;
};

inline RandomInstance random_instance(Rng& rng, const RandomSpec& spec = {},
                                      std::size_t max_embeddings = 3000,
                                      bool allow_xor = true) {
  while (true) {
    const int kappa = uniform(rng, 1, spec.max_kappa);
    Network net = random_network(rng, spec, kappa);
    ComputationTree tree = random_tree(rng, kappa, allow_xor);
    auto all = brute_embeddings(net, tree, max_embeddings);
    if (all.empty() || all.size() > max_embeddings) continue;
    return {std::move(net), std::move(tree), all.size()};
  }
}

inline std::vector<Rational> random_lengths(Rng& rng, int m) {
  std::vector<Rational> len(m);
  for (auto& l : len) l = uniform(rng, 0, 5) == 0 ? Rational(0) : make_rational(uniform(rng, 1, 20), uniform(rng, 1, 7));
  return len;
}

// A feasible flow over a few random embeddings, scaled to the capacities.
inline EmbeddingFlows random_feasible_flows(Rng& rng, const Network& net,
                                            const std::vector<Embedding>& all) {
  EmbeddingFlows f;
  const int k = uniform(rng, 1, std::min<int>(3, static_cast<int>(all.size())));
  for (int i = 0; i < k; ++i) {
    f.x[all[uniform(rng, 0, static_cast<int>(all.size()) - 1)]] += make_rational(uniform(rng, 1, 4), uniform(rng, 1, 3));
  }
  std::vector<Rational> load(net.num_edges(), Rational(0));
  for (const auto& [b, x] : f.x) {
    const auto r = brute_usage(net, b);
    for (int e = 0; e < net.num_edges(); ++e) load[e] += r[e] * x;
  }
  Rational worst = 0;
  for (int e = 0; e < net.num_edges(); ++e) {
    if (sgn(load[e]) > 0) worst = std::max<Rational>(worst, load[e] / net.edge(e).cap);
  }
  if (worst > 1) {
    for (auto& [b, x] : f.x) x /= worst;
  }
  return f;
}

}  // namespace support
