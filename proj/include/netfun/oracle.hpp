#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <queue>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/network.hpp"
#include "netfun/tree.hpp"

namespace netfun {

// Operation counters for growth-trend checks.
struct OracleStats {
  std::uint64_t init_ops = 0;
  std::uint64_t heap_pushes = 0;
  std::uint64_t heap_pops = 0;
  std::uint64_t relaxations = 0;
  std::uint64_t backtrack_steps = 0;

  std::uint64_t total() const {
    return init_ops + heap_pushes + heap_pops + relaxations + backtrack_steps;
  }
};

// omega_u(theta) per node; nullopt is "unreachable".
template <class W>
struct PhaseTable {
  std::vector<std::optional<W>> omega;
  std::vector<NodeId> sigma;
};

template <class W>
struct OracleResult {
  Embedding embedding;
  W weight{};
  // One table per type, filled only when requested.
  std::vector<PhaseTable<W>> tables;
};

// Canonical text of the function carried by each type. Commutative operators
// sort their arguments so that equal expressions in different trees match.
inline std::vector<std::string> expression_keys(const ComputationTree& tree) {
  std::vector<std::string> key(tree.num_types());
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    if (tree.is_source_type(t)) {
      key[t] = "s" + std::to_string(t);
      continue;
    }
    const Operator& op = tree.producer(t);
    std::vector<std::string> args;
    for (TypeId p : tree.pre(t)) args.push_back(key[p]);
    if (op.kind != OpKind::kLookup) std::sort(args.begin(), args.end());
    std::string k = op_name(op.kind);
    if (op.kind == OpKind::kLookup) {
      k += "[";
      for (Symbol s : op.table) k += std::to_string(s) + ",";
      k += "]";
    }
    k += "(";
    for (std::size_t i = 0; i < args.size(); ++i) k += (i ? " " : "") + args[i];
    key[t] = k + ")";
  }
  return key;
}

// Phase tables shared between trees, keyed by expression.
template <class W>
using PhaseCache = std::map<std::string, PhaseTable<W>>;

namespace detail {

template <class W>
std::optional<W> add_costs(const std::optional<W>& a, const std::optional<W>& b) {
  if (!a || !b) return std::nullopt;
  return *a + *b;
}

// Two-pass search shared by all oracle variants.
//   init(t, u, pre_sum): starting cost of holding type t at u before any
//     transfer (pre_sum is the sum of predecessor costs at u);
//   step(arc, t): cost of moving one unit of type t along arc, or nullopt.
template <class W, class Init, class Step>
OracleResult<W> two_pass_search(const Network& net, const ComputationTree& tree,
                                Init&& init, Step&& step, bool keep_tables,
                                OracleStats* stats, PhaseCache<W>* cache,
                                const std::vector<std::string>* keys) {
  const int n = net.num_nodes();
  const int num_types = tree.num_types();
  std::vector<PhaseTable<W>> tables(num_types);
  OracleStats local;
  OracleStats& st = stats ? *stats : local;

  using Entry = std::pair<W, NodeId>;
  for (TypeId t = 0; t < num_types; ++t) {
    if (cache && keys) {
      if (auto it = cache->find((*keys)[t]); it != cache->end()) {
        tables[t] = it->second;
        continue;
      }
    }
    PhaseTable<W>& tab = tables[t];
    tab.omega.assign(n, std::nullopt);
    tab.sigma.assign(n, 0);
    for (NodeId u = 0; u < n; ++u) {
      std::optional<W> pre_sum = W(0);
      for (TypeId p : tree.pre(t)) {
        pre_sum = add_costs(pre_sum, tables[p].omega[u]);
        ++st.init_ops;
      }
      tab.omega[u] = init(t, u, pre_sum);
      tab.sigma[u] = u;
      ++st.init_ops;
    }
    // Greedy selection, ties broken by the lowest node id.
    std::priority_queue<Entry, std::vector<Entry>, std::greater<Entry>> heap;
    for (NodeId u = 0; u < n; ++u) {
      if (tab.omega[u]) {
        heap.emplace(*tab.omega[u], u);
        ++st.heap_pushes;
      }
    }
    std::vector<char> done(n, 0);
    while (!heap.empty()) {
      auto [cost, v] = heap.top();
      heap.pop();
      ++st.heap_pops;
      if (done[v] || !tab.omega[v] || cost != *tab.omega[v]) continue;
      done[v] = 1;
      for (const Arc& a : net.out_arcs(v)) {
        ++st.relaxations;
        std::optional<W> len = step(a, t);
        if (!len) continue;
        W candidate = cost + *len;
        const NodeId u = a.to;
        if (!tab.omega[u] || candidate < *tab.omega[u]) {
          tab.omega[u] = candidate;
          tab.sigma[u] = v;
          heap.emplace(candidate, u);
          ++st.heap_pushes;
        }
      }
    }
    if (cache && keys) cache->emplace((*keys)[t], tab);
  }

  const TypeId last = num_types - 1;
  const auto& final_cost = tables[last].omega[net.terminal()];
  if (!final_cost) {
    throw Error(ErrorCode::kUnreachable,
                "no embedding reaches terminal " + net.name(net.terminal()));
  }
  OracleResult<W> result;
  result.weight = *final_cost;
  result.embedding.paths.assign(num_types, Path{});
  result.embedding.paths[last] = Path{net.terminal()};
  for (TypeId t = last; t >= 0; --t) {
    Path& p = result.embedding.paths[t];
    NodeId u = p.front();
    const auto& sigma = tables[t].sigma;
    while (sigma[u] != u) {
      u = sigma[u];
      p.insert(p.begin(), u);
      ++st.backtrack_steps;
    }
    for (TypeId pre : tree.pre(t)) result.embedding.paths[pre] = Path{u};
  }
  if (keep_tables) result.tables = std::move(tables);
  return result;
}

}  // namespace detail

template <class W>
struct OracleOptions {
  // w(theta) multiplies every link length for type theta; empty means 1.
  std::span<const W> type_weights{};
  // Edges with a zero entry are unusable; empty means all usable.
  std::span<const char> usable_edges{};
  bool keep_tables = false;
  OracleStats* stats = nullptr;
  PhaseCache<W>* cache = nullptr;
  const std::vector<std::string>* expression_keys = nullptr;
};

// Minimum-weight embedding under edge lengths L: a forward pass that, for
// each type in label order, finds the cheapest way to hold it at every node
// (computing it locally starts at the summed predecessor costs), followed by
// backtracking the predecessor pointers from the terminal.
template <class W>
OracleResult<W> optimal_embedding(const Network& net, const ComputationTree& tree,
                                  std::span<const W> lengths,
                                  const OracleOptions<W>& options = {}) {
  if (static_cast<int>(lengths.size()) != net.num_edges()) {
    throw Error(ErrorCode::kDimensionMismatch, "length function size mismatch");
  }
  auto init = [&](TypeId t, NodeId u, const std::optional<W>& pre_sum) -> std::optional<W> {
    if (tree.is_source_type(t)) {
      if (u == net.source(t)) return W(0);
      return std::nullopt;
    }
    return pre_sum;
  };
  auto step = [&](const Arc& a, TypeId t) -> std::optional<W> {
    if (!options.usable_edges.empty() && !options.usable_edges[a.edge]) return std::nullopt;
    if (options.type_weights.empty()) return lengths[a.edge];
    return lengths[a.edge] * options.type_weights[t];
  };
  return detail::two_pass_search<W>(net, tree, init, step, options.keep_tables,
                                    options.stats, options.cache, options.expression_keys);
}

inline OracleResult<Rational> optimal_embedding(const Network& net,
                                                const ComputationTree& tree,
                                                const std::vector<Rational>& lengths) {
  return optimal_embedding<Rational>(net, tree, std::span<const Rational>(lengths));
}

// Per-type energy costs and per-node budgets.
struct EnergyModel {
  std::vector<Rational> budget;   // E(u)
  std::vector<Rational> compute;  // E_C per type
  std::vector<Rational> transmit; // E_T per type
  std::vector<Rational> receive;  // E_R per type
};

// E_B(u): compute at path starts, transmit at every node but the last,
// receive at every node but the first.
inline std::vector<Rational> energy_load(const Network& net, const ComputationTree& tree,
                                         const Embedding& b, const EnergyModel& em) {
  std::vector<Rational> load(net.num_nodes(), Rational(0));
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    const Path& p = b.paths.at(t);
    load[p.front()] += em.compute[t];
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      load[p[j]] += em.transmit[t];
      load[p[j + 1]] += em.receive[t];
    }
  }
  return load;
}

// cost * length where a nullopt length is infinite and zero cost never is.
template <class W>
std::optional<W> scaled_cost(const W& cost, const std::optional<W>& length) {
  if (cost == W(0)) return W(0);
  if (!length) return std::nullopt;
  return cost * *length;
}

// Energy variant: lengths live on nodes; holding costs include E_C l(u) and a
// transfer v->u costs E_T l(v) + E_R l(u).
template <class W>
OracleResult<W> optimal_embedding_energy(const Network& net, const ComputationTree& tree,
                                         std::span<const std::optional<W>> node_lengths,
                                         std::span<const W> compute,
                                         std::span<const W> transmit,
                                         std::span<const W> receive,
                                         bool keep_tables = false,
                                         OracleStats* stats = nullptr) {
  if (static_cast<int>(node_lengths.size()) != net.num_nodes()) {
    throw Error(ErrorCode::kDimensionMismatch, "node length function size mismatch");
  }
  auto init = [&](TypeId t, NodeId u, const std::optional<W>& pre_sum) -> std::optional<W> {
    std::optional<W> here = scaled_cost(compute[t], node_lengths[u]);
    if (tree.is_source_type(t)) {
      if (u != net.source(t)) return std::nullopt;
      return here;
    }
    return detail::add_costs(here, pre_sum);
  };
  auto step = [&](const Arc& a, TypeId t) -> std::optional<W> {
    return detail::add_costs(scaled_cost(transmit[t], node_lengths[a.from]),
                             scaled_cost(receive[t], node_lengths[a.to]));
  };
  return detail::two_pass_search<W>(net, tree, init, step, keep_tables, stats, nullptr,
                                    nullptr);
}

// Energy weight sum_u E_B(u) l(u) in exact arithmetic.
inline std::optional<Rational> energy_weight(const Network& net, const ComputationTree& tree,
                                             const Embedding& b, const EnergyModel& em,
                                             std::span<const std::optional<Rational>> l) {
  std::vector<Rational> load = energy_load(net, tree, b, em);
  Rational total = 0;
  for (NodeId u = 0; u < net.num_nodes(); ++u) {
    auto c = scaled_cost(load[u], l[u]);
    if (!c) return std::nullopt;
    total += *c;
  }
  return total;
}

}  // namespace netfun
