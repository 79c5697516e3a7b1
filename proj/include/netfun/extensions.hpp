#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/lp.hpp"
#include "netfun/network.hpp"
#include "netfun/oracle.hpp"
#include "netfun/primal_dual.hpp"
#include "netfun/rational.hpp"
#include "netfun/tree.hpp"

namespace netfun {

// Exact result over an explicit column set.
struct ExactSolution {
  EmbeddingFlows flows;
  Rational rate;
  std::vector<Rational> duals;
  std::size_t columns = 0;
};

// ---------------------------------------------------------------------------
// Several trees for the same function. Embedding::tree holds the tree index.

inline void validate_tree_list(const Network& net, const std::vector<ComputationTree>& trees) {
  if (trees.empty()) throw Error(ErrorCode::kNotATree, "no computation tree supplied");
  for (const auto& tree : trees) validate_instance(net, tree).throw_if_error();
}

struct MultiTreeOptions {
  // Share phase tables between trees for types computing the same expression.
  bool share_subexpressions = false;
};

inline ApproxSolution multi_tree_approx(const Network& net,
                                        const std::vector<ComputationTree>& trees,
                                        const ApproxParams& params,
                                        const MultiTreeOptions& options = {}) {
  validate_tree_list(net, trees);
  std::vector<detail::TreeOracle> oracles;
  std::vector<std::vector<std::string>> keys;
  for (int i = 0; i < static_cast<int>(trees.size()); ++i) {
    oracles.emplace_back(net, trees[i], i, std::span<const Rational>{});
    keys.push_back(expression_keys(trees[i]));
  }
  auto choose = [&](std::span<const double> len, std::span<const char> usable) {
    PhaseCache<double> cache;
    std::optional<OracleResult<double>> best;
    int best_tree = -1;
    for (int i = 0; i < static_cast<int>(oracles.size()); ++i) {
      try {
        OracleResult<double> r = options.share_subexpressions
                                     ? oracles[i].best(len, usable, &cache, &keys[i])
                                     : oracles[i].best(len, usable);
        if (!best || r.weight < best->weight) {
          best = std::move(r);
          best_tree = i;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnreachable) throw;
      }
    }
    if (!best) throw Error(ErrorCode::kUnreachable, "no tree can be embedded");
    PackingChoice<Embedding> c;
    c.usage = sparse_usage(oracles[best_tree].usage(best->embedding));
    c.key = std::move(best->embedding);
    c.weight = best->weight;
    return c;
  };
  auto alpha = [&](std::span<const Rational> len, std::span<const char> usable) {
    std::optional<Rational> a;
    for (const auto& o : oracles) {
      if (auto w = o.best_exact(len, usable); w && (!a || *w < *a)) a = *w;
    }
    return a.value_or(Rational(0));
  };
  ApproxResult<Embedding> run =
      garg_konemann<Embedding>(net.capacities(), choose, alpha, params);
  ApproxSolution out;
  out.flows.x = std::move(run.x);
  copy_run_info(out, run);
  return out;
}

// Packing LP over the deduplicated usage profiles of the given embeddings.
inline ExactSolution solve_columns_exact(const std::vector<Rational>& capacity,
                                         const std::vector<Embedding>& embeddings,
                                         const std::vector<std::vector<Rational>>& usage,
                                         const std::vector<Rational>& objective) {
  std::map<std::pair<std::vector<Rational>, Rational>, int> seen;
  std::vector<PackingColumn> cols;
  std::vector<int> rep;
  for (int j = 0; j < static_cast<int>(embeddings.size()); ++j) {
    if (sgn(objective[j]) <= 0) continue;
    auto [it, fresh] = seen.emplace(std::make_pair(usage[j], objective[j]),
                                    static_cast<int>(cols.size()));
    if (!fresh) continue;
    PackingColumn c;
    c.usage = sparse_usage(usage[j]);
    c.objective = objective[j];
    if (c.usage.empty()) throw Error(ErrorCode::kUnbounded, "a column uses no resource");
    cols.push_back(std::move(c));
    rep.push_back(j);
  }
  ExactSolution out;
  out.columns = cols.size();
  if (cols.empty()) {
    out.rate = 0;
    out.duals.assign(capacity.size(), Rational(0));
    return out;
  }
  PackingSolution sol = solve_packing_exact(capacity, cols);
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (sgn(sol.x[j]) > 0) out.flows.x[embeddings[rep[j]]] = sol.x[j];
  }
  out.rate = sol.objective;
  out.duals = std::move(sol.duals);
  return out;
}

inline ExactSolution multi_tree_exact(const Network& net,
                                      const std::vector<ComputationTree>& trees,
                                      std::size_t cap) {
  validate_tree_list(net, trees);
  std::vector<Embedding> all;
  std::vector<std::vector<Rational>> usage;
  for (int i = 0; i < static_cast<int>(trees.size()); ++i) {
    std::vector<Embedding> part = enumerate_embeddings(net, trees[i], cap, i);
    detail::TreeOracle o(net, trees[i], i, {});
    for (auto& b : part) {
      usage.push_back(o.usage(b));
      all.push_back(std::move(b));
    }
  }
  return solve_columns_exact(net.capacities(), all, usage,
                             std::vector<Rational>(all.size(), Rational(1)));
}

// ---------------------------------------------------------------------------
// Several terminals, each with its own tree and sources.

enum class MultiTerminalMode { kWeightedSum, kConcurrent };

struct TerminalDemand {
  NodeId terminal = 0;
  std::vector<NodeId> sources;
  ComputationTree tree;
  Rational alpha = 1;
};

struct MultiTerminalInstance {
  std::vector<TerminalDemand> terminals;
  MultiTerminalMode mode = MultiTerminalMode::kWeightedSum;
};

// The network seen by terminal i; only sources and terminal differ.
inline Network network_for(const Network& net, const TerminalDemand& d) {
  return Network(net.num_nodes(), net.edges(), d.sources, d.terminal, net.names());
}

inline std::vector<Network> validate_multi_terminal(const Network& net,
                                                    const MultiTerminalInstance& inst) {
  if (inst.terminals.empty()) {
    throw Error(ErrorCode::kBadSourceTerminal, "no terminal demands");
  }
  std::set<NodeId> used;
  std::vector<Network> views;
  bool any_positive = false;
  for (const auto& d : inst.terminals) {
    if (sgn(d.alpha) < 0) throw Error(ErrorCode::kNonpositiveWeight, "negative alpha");
    if (sgn(d.alpha) > 0) any_positive = true;
    for (NodeId s : d.sources) {
      if (!used.insert(s).second) {
        throw Error(ErrorCode::kSharedSources,
                    "source " + (net.in_range(s) ? net.name(s) : std::to_string(s)) +
                        " belongs to more than one terminal");
      }
    }
    views.push_back(network_for(net, d));
    validate_instance(views.back(), d.tree).throw_if_error();
  }
  if (!any_positive) throw Error(ErrorCode::kAllWeightsZero, "every alpha is zero");
  return views;
}

struct MultiTerminalSolution {
  // Embedding::tree is the terminal index.
  EmbeddingFlows flows;
  std::vector<Rational> per_terminal;
  // Weighted sum of rates, or the common scale lambda in concurrent mode.
  Rational value;
  Rational dual_bound;
  std::int64_t iterations = 0;
  std::int64_t iteration_bound = 0;
  std::vector<TraceRecord> trace;
};

inline void fill_per_terminal(MultiTerminalSolution& out, std::size_t gamma) {
  out.per_terminal.assign(gamma, Rational(0));
  for (const auto& [b, x] : out.flows.x) out.per_terminal.at(b.tree) += x;
}

// Maximizes sum_i alpha_i lambda_i. A column for terminal i has objective
// alpha_i, so the oracle ranks embeddings by weight / alpha_i.
inline MultiTerminalSolution weighted_sum_approx(const Network& net,
                                                 const MultiTerminalInstance& inst,
                                                 const ApproxParams& params) {
  std::vector<Network> views = validate_multi_terminal(net, inst);
  std::vector<detail::TreeOracle> oracles;
  for (std::size_t i = 0; i < views.size(); ++i) {
    oracles.emplace_back(views[i], inst.terminals[i].tree, static_cast<int>(i),
                         std::span<const Rational>{});
  }
  auto choose = [&](std::span<const double> len, std::span<const char> usable) {
    std::optional<PackingChoice<Embedding>> best;
    double best_score = 0;
    for (std::size_t i = 0; i < oracles.size(); ++i) {
      const Rational& a = inst.terminals[i].alpha;
      if (sgn(a) == 0) continue;
      try {
        OracleResult<double> r = oracles[i].best(len, usable);
        const double score = r.weight / to_double(a);
        if (!best || score < best_score) {
          PackingChoice<Embedding> c;
          c.usage = sparse_usage(oracles[i].usage(r.embedding));
          c.key = std::move(r.embedding);
          c.objective = a;
          c.weight = r.weight;
          best = std::move(c);
          best_score = score;
        }
      } catch (const Error& e) {
        if (e.code() != ErrorCode::kUnreachable) throw;
      }
    }
    if (!best) throw Error(ErrorCode::kUnreachable, "no terminal can be served");
    return *best;
  };
  auto alpha = [&](std::span<const Rational> len, std::span<const char> usable) {
    std::optional<Rational> best;
    for (std::size_t i = 0; i < oracles.size(); ++i) {
      const Rational& a = inst.terminals[i].alpha;
      if (sgn(a) == 0) continue;
      if (auto w = oracles[i].best_exact(len, usable)) {
        Rational score = *w / a;
        if (!best || score < *best) best = score;
      }
    }
    return best.value_or(Rational(0));
  };
  ApproxResult<Embedding> run =
      garg_konemann<Embedding>(net.capacities(), choose, alpha, params);
  MultiTerminalSolution out;
  out.flows.x = std::move(run.x);
  out.value = run.objective;
  out.dual_bound = run.dual_bound;
  out.iterations = run.iterations;
  out.iteration_bound = run.iteration_bound;
  out.trace = std::move(run.trace);
  fill_per_terminal(out, views.size());
  return out;
}

inline MultiTerminalSolution weighted_sum_exact(const Network& net,
                                                const MultiTerminalInstance& inst,
                                                std::size_t cap) {
  std::vector<Network> views = validate_multi_terminal(net, inst);
  std::vector<Embedding> all;
  std::vector<std::vector<Rational>> usage;
  std::vector<Rational> objective;
  for (std::size_t i = 0; i < views.size(); ++i) {
    const auto& d = inst.terminals[i];
    if (sgn(d.alpha) == 0) continue;
    detail::TreeOracle o(views[i], d.tree, static_cast<int>(i), {});
    for (auto& b : enumerate_embeddings(views[i], d.tree, cap, static_cast<int>(i))) {
      usage.push_back(o.usage(b));
      objective.push_back(d.alpha);
      all.push_back(std::move(b));
    }
  }
  ExactSolution sol = solve_columns_exact(net.capacities(), all, usage, objective);
  MultiTerminalSolution out;
  out.flows = std::move(sol.flows);
  out.value = sol.rate;
  out.dual_bound = sol.rate;
  fill_per_terminal(out, views.size());
  return out;
}

// Concurrent mode: columns are tuples (B_1..B_gamma) with usage
// sum_i alpha_i r_{B_i}; every component is optimized separately.
inline MultiTerminalSolution concurrent_approx(const Network& net,
                                               const MultiTerminalInstance& inst,
                                               const ApproxParams& params) {
  std::vector<Network> views = validate_multi_terminal(net, inst);
  const std::size_t gamma = views.size();
  std::vector<detail::TreeOracle> oracles;
  for (std::size_t i = 0; i < gamma; ++i) {
    oracles.emplace_back(views[i], inst.terminals[i].tree, static_cast<int>(i),
                         std::span<const Rational>{});
  }
  using Tuple = std::vector<Embedding>;
  auto choose = [&](std::span<const double> len, std::span<const char> usable) {
    PackingChoice<Tuple> c;
    std::vector<Rational> total(net.num_edges(), Rational(0));
    for (std::size_t i = 0; i < gamma; ++i) {
      const Rational& a = inst.terminals[i].alpha;
      if (sgn(a) == 0) {
        c.key.push_back(Embedding{static_cast<int>(i), {}});
        continue;
      }
      OracleResult<double> r = oracles[i].best(len, usable);
      std::vector<Rational> u = oracles[i].usage(r.embedding);
      for (EdgeId e = 0; e < net.num_edges(); ++e) total[e] += a * u[e];
      c.weight += to_double(a) * r.weight;
      c.key.push_back(std::move(r.embedding));
    }
    c.usage = sparse_usage(total);
    return c;
  };
  auto alpha = [&](std::span<const Rational> len, std::span<const char> usable) {
    Rational sum = 0;
    for (std::size_t i = 0; i < gamma; ++i) {
      const Rational& a = inst.terminals[i].alpha;
      if (sgn(a) == 0) continue;
      auto w = oracles[i].best_exact(len, usable);
      if (!w) return Rational(0);
      sum += a * *w;
    }
    return sum;
  };
  ApproxResult<Tuple> run = garg_konemann<Tuple>(net.capacities(), choose, alpha, params);
  MultiTerminalSolution out;
  for (const auto& [tuple, x] : run.x) {
    for (std::size_t i = 0; i < gamma; ++i) {
      const Rational& a = inst.terminals[i].alpha;
      if (sgn(a) == 0) continue;
      out.flows.x[tuple[i]] += a * x;
    }
  }
  out.value = run.objective;
  out.dual_bound = run.dual_bound;
  out.iterations = run.iterations;
  out.iteration_bound = run.iteration_bound;
  out.trace = std::move(run.trace);
  fill_per_terminal(out, gamma);
  return out;
}

// Exact concurrent rate via the equivalent LP with one block of columns per
// terminal: max lambda s.t. capacities and sum_B x_i(B) = alpha_i lambda.
inline MultiTerminalSolution concurrent_exact(const Network& net,
                                              const MultiTerminalInstance& inst,
                                              std::size_t cap) {
  std::vector<Network> views = validate_multi_terminal(net, inst);
  const std::size_t gamma = views.size();
  LinearProgram<Rational> lp;
  const int lambda = lp.add_variable(Rational(1));
  std::vector<Embedding> cols;
  std::vector<std::vector<Rational>> usage;
  std::vector<std::vector<std::pair<int, Rational>>> demand(gamma);
  std::vector<std::vector<std::pair<int, Rational>>> capacity_rows(net.num_edges());
  for (std::size_t i = 0; i < gamma; ++i) {
    const auto& d = inst.terminals[i];
    if (sgn(d.alpha) == 0) continue;
    detail::TreeOracle o(views[i], d.tree, static_cast<int>(i), {});
    std::set<std::vector<Rational>> seen;
    for (auto& b : enumerate_embeddings(views[i], d.tree, cap, static_cast<int>(i))) {
      std::vector<Rational> u = o.usage(b);
      if (!seen.insert(u).second) continue;
      const int var = lp.add_variable();
      demand[i].emplace_back(var, Rational(1));
      for (EdgeId e = 0; e < net.num_edges(); ++e) {
        if (sgn(u[e]) != 0) capacity_rows[e].emplace_back(var, u[e]);
      }
      cols.push_back(std::move(b));
    }
    demand[i].emplace_back(lambda, -d.alpha);
    if (demand[i].size() == 1) {
      // No embedding serves a terminal with positive demand.
      MultiTerminalSolution out;
      out.value = 0;
      fill_per_terminal(out, gamma);
      return out;
    }
    lp.add_row(std::move(demand[i]), RowSense::kEqual, Rational(0));
  }
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    lp.add_row(std::move(capacity_rows[e]), RowSense::kLessEqual, net.edge(e).cap);
  }
  LpResult<Rational> res = solve_lp(lp);
  if (res.status == LpStatus::kUnbounded) throw Error(ErrorCode::kUnbounded, "unbounded rate");
  if (res.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kNumericFailure, "concurrent LP did not reach an optimum");
  }
  MultiTerminalSolution out;
  for (std::size_t j = 0; j < cols.size(); ++j) {
    if (sgn(res.x[j + 1]) > 0) out.flows.x[cols[j]] = res.x[j + 1];
  }
  out.value = res.objective;
  out.dual_bound = res.objective;
  fill_per_terminal(out, gamma);
  return out;
}

// ---------------------------------------------------------------------------
// Precision: type theta occupies w(theta) units of capacity per symbol.

inline void validate_precision(const ComputationTree& tree, std::span<const Rational> w) {
  if (static_cast<int>(w.size()) != tree.num_types()) {
    throw Error(ErrorCode::kDimensionMismatch, "one precision weight per type is required");
  }
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    if (sgn(w[t]) <= 0) {
      throw Error(ErrorCode::kNonpositiveWeight,
                  "precision of " + tree.edge(t).name + " must be positive");
    }
  }
}

inline ApproxSolution precision_approx(const Network& net, const ComputationTree& tree,
                                       std::span<const Rational> w,
                                       const ApproxParams& params) {
  validate_precision(tree, w);
  return approx_max_rate(net, tree, params, w);
}

inline EmbeddingEdgeResult precision_exact(const Network& net, const ComputationTree& tree,
                                           std::span<const Rational> w, std::size_t cap) {
  validate_precision(tree, w);
  return solve_embedding_edge_exact(net, tree, cap, w);
}

inline NodeArcSolution precision_node_arc(const Network& net, const ComputationTree& tree,
                                          std::span<const Rational> w) {
  validate_precision(tree, w);
  return solve_node_arc(net, tree, w);
}

// ---------------------------------------------------------------------------
// Energy: node budgets replace link capacities.

inline void validate_energy(const Network& net, const ComputationTree& tree,
                            const EnergyModel& em) {
  const auto g = static_cast<std::size_t>(tree.num_types());
  if (em.budget.size() != static_cast<std::size_t>(net.num_nodes()) ||
      em.compute.size() != g || em.transmit.size() != g || em.receive.size() != g) {
    throw Error(ErrorCode::kDimensionMismatch, "energy model size mismatch");
  }
  for (const auto* v : {&em.budget, &em.compute, &em.transmit, &em.receive}) {
    for (const Rational& x : *v) {
      if (sgn(x) < 0) throw Error(ErrorCode::kNegativeCapacity, "negative energy value");
    }
  }
}

inline std::vector<std::pair<int, Rational>> sparse_energy_load(const Network& net,
                                                                const ComputationTree& tree,
                                                                const Embedding& b,
                                                                const EnergyModel& em) {
  return sparse_usage(energy_load(net, tree, b, em));
}

// Node lengths with zero-budget nodes marked infinite.
template <class W>
std::vector<std::optional<W>> node_lengths(std::span<const W> len, std::span<const char> usable) {
  std::vector<std::optional<W>> out(len.size());
  for (std::size_t u = 0; u < len.size(); ++u) {
    if (usable[u]) out[u] = len[u];
  }
  return out;
}

inline ApproxSolution energy_approx(const Network& net, const ComputationTree& tree,
                                    const EnergyModel& em, const ApproxParams& params) {
  validate_instance(net, tree).throw_if_error();
  validate_energy(net, tree, em);
  std::vector<double> ec, et, er;
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    ec.push_back(to_double(em.compute[t]));
    et.push_back(to_double(em.transmit[t]));
    er.push_back(to_double(em.receive[t]));
  }
  auto choose = [&](std::span<const double> len, std::span<const char> usable) {
    std::vector<std::optional<double>> l = node_lengths(len, usable);
    OracleResult<double> r = optimal_embedding_energy<double>(
        net, tree, std::span<const std::optional<double>>(l), ec, et, er);
    PackingChoice<Embedding> c;
    c.usage = sparse_energy_load(net, tree, r.embedding, em);
    c.key = std::move(r.embedding);
    c.weight = r.weight;
    return c;
  };
  auto alpha = [&](std::span<const Rational> len, std::span<const char> usable) {
    std::vector<std::optional<Rational>> l = node_lengths(len, usable);
    try {
      return optimal_embedding_energy<Rational>(
                 net, tree, std::span<const std::optional<Rational>>(l), em.compute,
                 em.transmit, em.receive)
          .weight;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnreachable) return Rational(0);
      throw;
    }
  };
  ApproxResult<Embedding> run =
      garg_konemann<Embedding>(em.budget, choose, alpha, params, ErrorCode::kZeroBudget);
  ApproxSolution out;
  out.flows.x = std::move(run.x);
  copy_run_info(out, run);
  return out;
}

inline ExactSolution energy_exact(const Network& net, const ComputationTree& tree,
                                  const EnergyModel& em, std::size_t cap) {
  validate_instance(net, tree).throw_if_error();
  validate_energy(net, tree, em);
  std::vector<Embedding> all = enumerate_embeddings(net, tree, cap);
  std::vector<std::vector<Rational>> usage;
  for (const auto& b : all) usage.push_back(energy_load(net, tree, b, em));
  return solve_columns_exact(em.budget, all, usage,
                             std::vector<Rational>(all.size(), Rational(1)));
}

// Node budgets consumed by embedding flows.
inline std::vector<Rational> energy_usage(const Network& net, const ComputationTree& tree,
                                          const EmbeddingFlows& flows, const EnergyModel& em) {
  std::vector<Rational> total(net.num_nodes(), Rational(0));
  for (const auto& [b, x] : flows.x) {
    std::vector<Rational> load = energy_load(net, tree, b, em);
    for (NodeId u = 0; u < net.num_nodes(); ++u) total[u] += load[u] * x;
  }
  return total;
}

}  // namespace netfun
