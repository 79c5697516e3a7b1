#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/network.hpp"
#include "netfun/oracle.hpp"
#include "netfun/rational.hpp"
#include "netfun/simplex.hpp"
#include "netfun/tree.hpp"

namespace netfun {

// ---------------------------------------------------------------------------
// Generic packing LP: max sum_j a_j x_j  s.t.  sum_j U(i,j) x_j <= c_i.

struct PackingColumn {
  std::vector<std::pair<int, Rational>> usage;
  Rational objective = 1;
};

struct PackingSolution {
  std::vector<Rational> x;
  Rational objective;
  std::vector<Rational> duals;  // one per resource
  std::int64_t pivots = 0;
};

inline PackingSolution solve_packing_exact(const std::vector<Rational>& capacity,
                                           const std::vector<PackingColumn>& columns) {
  LinearProgram<Rational> lp;
  for (const auto& col : columns) lp.add_variable(col.objective);
  std::vector<std::vector<std::pair<int, Rational>>> rows(capacity.size());
  for (int j = 0; j < static_cast<int>(columns.size()); ++j) {
    for (const auto& [i, a] : columns[j].usage) rows.at(i).emplace_back(j, a);
  }
  for (std::size_t i = 0; i < capacity.size(); ++i) {
    lp.add_row(std::move(rows[i]), RowSense::kLessEqual, capacity[i]);
  }
  LpResult<Rational> res = solve_lp(lp);
  if (res.status == LpStatus::kUnbounded) {
    throw Error(ErrorCode::kUnbounded, "packing LP is unbounded");
  }
  if (res.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kNumericFailure, "packing LP did not reach an optimum");
  }
  return PackingSolution{std::move(res.x), res.objective, std::move(res.duals), res.pivots};
}

// ---------------------------------------------------------------------------
// Embedding-Edge LP over an enumerated embedding set.

struct EmbeddingEdgeResult {
  EmbeddingFlows flows;
  Rational lambda;
  // Optimal dual lengths, one per edge: a certificate with D(L) = lambda.
  std::vector<Rational> dual_lengths;
  std::size_t num_embeddings = 0;
  std::size_t num_profiles = 0;
};

// Embeddings with identical usage give identical LP columns; only the first
// (canonical) representative of each profile becomes a variable.
inline EmbeddingEdgeResult solve_embedding_edge_exact(
    const Network& net, const ComputationTree& tree, std::size_t cap,
    std::span<const Rational> type_weights = {}) {
  validate_instance(net, tree).throw_if_error();
  std::vector<Embedding> all = enumerate_embeddings(net, tree, cap);
  std::vector<Rational> weights(tree.num_types(), Rational(1));
  if (!type_weights.empty()) weights.assign(type_weights.begin(), type_weights.end());

  std::map<std::vector<Rational>, int> profile_index;
  std::vector<const Embedding*> representative;
  std::vector<PackingColumn> columns;
  for (const Embedding& b : all) {
    std::vector<Rational> usage =
        weighted_edge_usage<Rational>(net, tree, b, std::span<const Rational>(weights));
    auto [it, inserted] = profile_index.emplace(usage, static_cast<int>(columns.size()));
    if (!inserted) continue;
    PackingColumn col;
    for (EdgeId e = 0; e < net.num_edges(); ++e) {
      if (sgn(usage[e]) != 0) col.usage.emplace_back(e, usage[e]);
    }
    if (col.usage.empty()) {
      throw Error(ErrorCode::kUnbounded, "an embedding uses no link");
    }
    columns.push_back(std::move(col));
    representative.push_back(&b);
  }
  EmbeddingEdgeResult out;
  out.num_embeddings = all.size();
  out.num_profiles = columns.size();
  if (columns.empty()) {
    out.lambda = 0;
    out.dual_lengths.assign(net.num_edges(), Rational(0));
    return out;
  }
  PackingSolution sol = solve_packing_exact(net.capacities(), columns);
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (sgn(sol.x[j]) > 0) out.flows.x[*representative[j]] = sol.x[j];
  }
  out.lambda = sol.objective;
  out.dual_lengths = std::move(sol.duals);
  return out;
}

// Capacity check for embedding flows: every violated edge with its excess.
struct CapacityViolation {
  EdgeId edge = 0;
  Rational load;
  Rational capacity;
};

inline std::vector<Rational> edge_loads(const Network& net, const ComputationTree& tree,
                                        const EmbeddingFlows& flows) {
  std::vector<Rational> load(net.num_edges(), Rational(0));
  for (const auto& [b, x] : flows.x) {
    UsageProfile r = edge_usage(net, tree, b);
    for (EdgeId e = 0; e < net.num_edges(); ++e) {
      if (r[e]) load[e] += r[e] * x;
    }
  }
  return load;
}

inline std::vector<CapacityViolation> capacity_violations(const Network& net,
                                                          const ComputationTree& tree,
                                                          const EmbeddingFlows& flows) {
  std::vector<CapacityViolation> out;
  std::vector<Rational> load = edge_loads(net, tree, flows);
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    if (load[e] > net.edge(e).cap) out.push_back({e, load[e], net.edge(e).cap});
  }
  for (const auto& [b, x] : flows.x) {
    if (sgn(x) < 0) out.push_back({-1, x, Rational(0)});
  }
  return out;
}

// ---------------------------------------------------------------------------
// Node-Arc LP.

// Flows per type over arc slots (2e: u->v, 2e+1: v->u) and self-loops.
struct NodeArcSolution {
  Rational lambda;
  std::vector<std::vector<Rational>> arc_flow;   // [type][arc slot]
  std::vector<std::vector<Rational>> self_flow;  // [type][node]

  static NodeArcSolution zero(const Network& net, const ComputationTree& tree) {
    NodeArcSolution s;
    s.lambda = 0;
    s.arc_flow.assign(tree.num_types(), std::vector<Rational>(net.num_arc_slots(), Rational(0)));
    s.self_flow.assign(tree.num_types(), std::vector<Rational>(net.num_nodes(), Rational(0)));
    return s;
  }
};

struct NodeArcSize {
  int variables = 0;
  int constraints = 0;
};

// |Gamma| (arcs + n) + 1 variables; n(|Gamma| - 1) conservation rows, n
// termination rows, kappa n generation rows and m capacity rows.
inline NodeArcSize node_arc_size(const Network& net, const ComputationTree& tree) {
  int arcs = 0;
  for (const Edge& e : net.edges()) arcs += e.directed ? 1 : 2;
  const int n = net.num_nodes();
  const int g = tree.num_types();
  return NodeArcSize{g * (arcs + n) + 1, n * (g - 1) + n + tree.kappa() * n + net.num_edges()};
}

struct NodeArcLayout {
  std::vector<std::vector<int>> arc_var;   // -1 for unusable slots
  std::vector<std::vector<int>> self_var;
  int lambda_var = 0;
};

struct NodeArcProgram {
  LinearProgram<Rational> lp;
  NodeArcLayout layout;
};

inline NodeArcProgram build_node_arc_lp(const Network& net, const ComputationTree& tree,
                                        std::span<const Rational> type_weights = {}) {
  NodeArcProgram prog;
  auto& lp = prog.lp;
  auto& lay = prog.layout;
  const int g = tree.num_types();
  const int n = net.num_nodes();
  lay.arc_var.assign(g, std::vector<int>(net.num_arc_slots(), -1));
  lay.self_var.assign(g, std::vector<int>(n, -1));
  for (TypeId t = 0; t < g; ++t) {
    for (int a = 0; a < net.num_arc_slots(); ++a) {
      if (net.is_arc_slot_used(a)) lay.arc_var[t][a] = lp.add_variable();
    }
    for (NodeId v = 0; v < n; ++v) lay.self_var[t][v] = lp.add_variable();
  }
  lay.lambda_var = lp.add_variable(Rational(1));

  using Terms = std::vector<std::pair<int, Rational>>;
  // out - in, where `in` includes the self-loop.
  auto balance = [&](TypeId t, NodeId v) {
    Terms terms;
    for (const Arc& a : net.out_arcs(v)) terms.emplace_back(lay.arc_var[t][a.index], 1);
    for (const Arc& a : net.in_arcs(v)) terms.emplace_back(lay.arc_var[t][a.index], -1);
    terms.emplace_back(lay.self_var[t][v], -1);
    return terms;
  };
  const TypeId last = g - 1;
  for (TypeId t = 0; t < last; ++t) {
    for (TypeId succ : tree.suc(t)) {
      for (NodeId v = 0; v < n; ++v) {
        Terms terms = balance(t, v);
        terms.emplace_back(lay.self_var[succ][v], 1);
        lp.add_row(std::move(terms), RowSense::kEqual, 0);
      }
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    Terms terms = balance(last, v);
    if (v == net.terminal()) terms.emplace_back(lay.lambda_var, 1);
    lp.add_row(std::move(terms), RowSense::kEqual, 0);
  }
  for (int l = 0; l < tree.kappa(); ++l) {
    for (NodeId v = 0; v < n; ++v) {
      Terms terms{{lay.self_var[l][v], 1}};
      if (v == net.source(l)) terms.emplace_back(lay.lambda_var, -1);
      lp.add_row(std::move(terms), RowSense::kEqual, 0);
    }
  }
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    Terms terms;
    for (TypeId t = 0; t < g; ++t) {
      Rational w = type_weights.empty() ? Rational(1) : type_weights[t];
      for (int a : {arc_index(e, false), arc_index(e, true)}) {
        if (lay.arc_var[t][a] >= 0) terms.emplace_back(lay.arc_var[t][a], w);
      }
    }
    lp.add_row(std::move(terms), RowSense::kLessEqual, net.edge(e).cap);
  }
  return prog;
}

struct LpStats {
  std::int64_t pivots = 0;
};

inline NodeArcSolution solve_node_arc(const Network& net, const ComputationTree& tree,
                                      std::span<const Rational> type_weights = {},
                                      LpStats* stats = nullptr) {
  validate_instance(net, tree).throw_if_error();
  NodeArcProgram prog = build_node_arc_lp(net, tree, type_weights);
  LpResult<Rational> res = solve_lp(prog.lp);
  if (stats) stats->pivots = res.pivots;
  if (res.status != LpStatus::kOptimal) {
    throw Error(ErrorCode::kNumericFailure, "node-arc LP did not reach an optimum");
  }
  NodeArcSolution sol = NodeArcSolution::zero(net, tree);
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    for (int a = 0; a < net.num_arc_slots(); ++a) {
      if (prog.layout.arc_var[t][a] >= 0) sol.arc_flow[t][a] = res.x[prog.layout.arc_var[t][a]];
    }
    for (NodeId v = 0; v < net.num_nodes(); ++v) {
      sol.self_flow[t][v] = res.x[prog.layout.self_var[t][v]];
    }
  }
  sol.lambda = res.x[prog.layout.lambda_var];
  return sol;
}

struct NodeArcViolation {
  std::string constraint;  // "conservation", "termination", "generation", ...
  std::string where;
  Rational residual;       // lhs - rhs
};

inline std::string describe_violations(const std::vector<NodeArcViolation>& v) {
  std::string out;
  for (const auto& x : v) {
    out += x.constraint + " at " + x.where + ": residual " + to_string(x.residual) + "\n";
  }
  return out;
}

// Exact check of every Node-Arc constraint; an empty list means feasible.
inline std::vector<NodeArcViolation> verify_node_arc(const Network& net,
                                                     const ComputationTree& tree,
                                                     const NodeArcSolution& sol,
                                                     std::span<const Rational> type_weights = {}) {
  std::vector<NodeArcViolation> out;
  const int g = tree.num_types();
  const int n = net.num_nodes();
  if (static_cast<int>(sol.arc_flow.size()) != g || static_cast<int>(sol.self_flow.size()) != g) {
    out.push_back({"shape", "solution", Rational(0)});
    return out;
  }
  for (TypeId t = 0; t < g; ++t) {
    if (static_cast<int>(sol.arc_flow[t].size()) != net.num_arc_slots() ||
        static_cast<int>(sol.self_flow[t].size()) != n) {
      out.push_back({"shape", "type " + tree.edge(t).name, Rational(0)});
      return out;
    }
  }
  auto balance = [&](TypeId t, NodeId v) {
    Rational b = 0;
    for (const Arc& a : net.out_arcs(v)) b += sol.arc_flow[t][a.index];
    for (const Arc& a : net.in_arcs(v)) b -= sol.arc_flow[t][a.index];
    b -= sol.self_flow[t][v];
    return b;
  };
  const TypeId last = g - 1;
  for (TypeId t = 0; t < last; ++t) {
    for (TypeId succ : tree.suc(t)) {
      for (NodeId v = 0; v < n; ++v) {
        Rational r = sol.self_flow[succ][v] + balance(t, v);
        if (sgn(r) != 0) {
          out.push_back({"conservation", tree.edge(t).name + "@" + net.name(v), r});
        }
      }
    }
  }
  for (NodeId v = 0; v < n; ++v) {
    Rational r = balance(last, v);
    if (v == net.terminal()) r += sol.lambda;
    if (sgn(r) != 0) out.push_back({"termination", tree.edge(last).name + "@" + net.name(v), r});
  }
  for (int l = 0; l < tree.kappa(); ++l) {
    for (NodeId v = 0; v < n; ++v) {
      Rational r = sol.self_flow[l][v] - (v == net.source(l) ? sol.lambda : Rational(0));
      if (sgn(r) != 0) out.push_back({"generation", tree.edge(l).name + "@" + net.name(v), r});
    }
  }
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    Rational load = 0;
    for (TypeId t = 0; t < g; ++t) {
      Rational w = type_weights.empty() ? Rational(1) : type_weights[t];
      load += (sol.arc_flow[t][arc_index(e, false)] + sol.arc_flow[t][arc_index(e, true)]) * w;
    }
    if (load > net.edge(e).cap) {
      out.push_back({"capacity",
                     net.name(net.edge(e).u) + "-" + net.name(net.edge(e).v),
                     load - net.edge(e).cap});
    }
  }
  for (TypeId t = 0; t < g; ++t) {
    for (int a = 0; a < net.num_arc_slots(); ++a) {
      const Rational& f = sol.arc_flow[t][a];
      if (sgn(f) < 0) {
        Arc arc = net.arc(a);
        out.push_back({"nonnegativity",
                       tree.edge(t).name + "@" + net.name(arc.from) + "->" + net.name(arc.to), f});
      } else if (sgn(f) > 0 && !net.is_arc_slot_used(a)) {
        Arc arc = net.arc(a);
        out.push_back({"direction",
                       tree.edge(t).name + "@" + net.name(arc.from) + "->" + net.name(arc.to), f});
      }
    }
    for (NodeId v = 0; v < n; ++v) {
      if (sgn(sol.self_flow[t][v]) < 0) {
        out.push_back({"nonnegativity", tree.edge(t).name + "@" + net.name(v) + " self",
                       sol.self_flow[t][v]});
      }
    }
  }
  if (sgn(sol.lambda) < 0) out.push_back({"nonnegativity", "lambda", sol.lambda});
  return out;
}

// Node-arc form of embedding flows: x(B) on every arc of B(theta) and on the
// self-loop at start(B(theta)).
inline NodeArcSolution flows_to_node_arc(const Network& net, const ComputationTree& tree,
                                         const EmbeddingFlows& flows) {
  NodeArcSolution sol = NodeArcSolution::zero(net, tree);
  for (const auto& [b, x] : flows.x) {
    validate_embedding(net, tree, b).throw_if_error();
    for (TypeId t = 0; t < tree.num_types(); ++t) {
      const Path& p = b.paths[t];
      sol.self_flow[t][p.front()] += x;
      for (std::size_t j = 0; j + 1 < p.size(); ++j) {
        sol.arc_flow[t][net.arc_between(p[j], p[j + 1])->index] += x;
      }
    }
    sol.lambda += x;
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Dual of the Embedding-Edge LP.

inline Rational dual_objective(const Network& net, const std::vector<Rational>& lengths) {
  if (static_cast<int>(lengths.size()) != net.num_edges()) {
    throw Error(ErrorCode::kDimensionMismatch, "length function size mismatch");
  }
  Rational d = 0;
  for (EdgeId e = 0; e < net.num_edges(); ++e) d += net.edge(e).cap * lengths[e];
  return d;
}

// Feasible iff the minimum embedding weight is at least 1. Without any
// embedding the dual has no constraints.
inline bool dual_feasible(const Network& net, const ComputationTree& tree,
                          const std::vector<Rational>& lengths) {
  for (const Rational& l : lengths) {
    if (sgn(l) < 0) return false;
  }
  try {
    return optimal_embedding(net, tree, lengths).weight >= 1;
  } catch (const Error& e) {
    if (e.code() == ErrorCode::kUnreachable) return true;
    throw;
  }
}

}  // namespace netfun
