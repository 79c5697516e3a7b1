#pragma once

#include <algorithm>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/lp.hpp"
#include "netfun/network.hpp"
#include "netfun/rational.hpp"
#include "netfun/tree.hpp"

namespace netfun {

struct DecomposeOptions {
  // Re-verify the remaining flows after every cycle removal and extraction.
  bool check_invariants = false;
  // Capacity weights per type, as in the precision variant; empty means 1.
  std::span<const Rational> type_weights{};
};

struct DecomposeStats {
  std::int64_t extractions = 0;
  std::int64_t cycles_removed = 0;
  std::int64_t walk_steps = 0;
  // Nonzero flow variables (arcs, self-loops and remaining rate) after each
  // removal or extraction, starting with the input count.
  std::vector<std::int64_t> nonzero_history;
  std::int64_t invariant_failures = 0;
};

namespace detail {

inline std::int64_t count_nonzero(const NodeArcSolution& s) {
  std::int64_t k = sgn(s.lambda) != 0;
  for (const auto& row : s.arc_flow) {
    for (const Rational& f : row) k += sgn(f) != 0;
  }
  for (const auto& row : s.self_flow) {
    for (const Rational& f : row) k += sgn(f) != 0;
  }
  return k;
}

}  // namespace detail

// Splits a feasible node-arc solution into embedding flows of the same total
// rate. Types are walked backwards from the terminal; each step follows an
// incoming arc (or the self-loop) with positive flow, and a revisited node
// closes a redundant cycle that is cancelled on the spot.
inline EmbeddingFlows decompose(const Network& net, const ComputationTree& tree,
                                const NodeArcSolution& input,
                                const DecomposeOptions& options = {},
                                DecomposeStats* stats = nullptr) {
  validate_instance(net, tree).throw_if_error();
  if (auto v = verify_node_arc(net, tree, input, options.type_weights); !v.empty()) {
    throw Error(ErrorCode::kInfeasibleInput, describe_violations(v));
  }
  DecomposeStats local;
  DecomposeStats& st = stats ? *stats : local;

  NodeArcSolution f = input;
  const int g = tree.num_types();
  const TypeId last = g - 1;
  const std::int64_t budget = detail::count_nonzero(f) + 1;
  st.nonzero_history.push_back(detail::count_nonzero(f));

  auto record = [&] {
    const std::int64_t k = detail::count_nonzero(f);
    st.nonzero_history.push_back(k);
    if (options.check_invariants) {
      if (!verify_node_arc(net, tree, f, options.type_weights).empty()) ++st.invariant_failures;
    }
    if (st.extractions + st.cycles_removed > budget) {
      throw Error(ErrorCode::kNontermination, "decomposition exceeded its step budget");
    }
  };

  // Incoming flow of type t into v: self-loop first, then the smallest tail.
  auto choose = [&](TypeId t, NodeId v) -> NodeId {
    if (sgn(f.self_flow[t][v]) > 0) return v;
    for (const Arc& a : net.in_arcs(v)) {
      if (sgn(f.arc_flow[t][a.index]) > 0) return a.from;
    }
    throw Error(ErrorCode::kInfeasibleInput,
                "no incoming flow of " + tree.edge(t).name + " at " + net.name(v));
  };
  auto arc_flow = [&](TypeId t, NodeId from, NodeId to) -> Rational& {
    return f.arc_flow[t][net.arc_between(from, to)->index];
  };

  EmbeddingFlows out;
  while (sgn(f.lambda) > 0) {
    Embedding b;
    b.paths.assign(g, Path{});
    b.paths[last] = Path{net.terminal()};
    for (TypeId t = last; t >= 0; --t) {
      Path& p = b.paths[t];
      while (true) {
        const NodeId v = p.front();
        const NodeId u = choose(t, v);
        ++st.walk_steps;
        if (u == v) break;
        auto hit = std::find(p.begin(), p.end(), u);
        if (hit != p.end()) {
          // Cycle u -> v -> ... -> u: the arc uv plus the prefix up to u.
          Rational y = arc_flow(t, u, v);
          for (auto it = p.begin(); it != hit; ++it) y = std::min(y, arc_flow(t, *it, *(it + 1)));
          arc_flow(t, u, v) -= y;
          for (auto it = p.begin(); it != hit; ++it) arc_flow(t, *it, *(it + 1)) -= y;
          p.erase(p.begin(), hit);
          ++st.cycles_removed;
          record();
          continue;
        }
        p.insert(p.begin(), u);
      }
      for (TypeId pre : tree.pre(t)) b.paths[pre] = Path{p.front()};
    }
    // Bottleneck over every variable the embedding uses.
    Rational x = f.lambda;
    for (TypeId t = 0; t < g; ++t) {
      const Path& p = b.paths[t];
      x = std::min(x, f.self_flow[t][p.front()]);
      for (std::size_t j = 0; j + 1 < p.size(); ++j) x = std::min(x, arc_flow(t, p[j], p[j + 1]));
    }
    if (sgn(x) <= 0) {
      throw Error(ErrorCode::kNontermination, "extracted a zero flow");
    }
    for (TypeId t = 0; t < g; ++t) {
      const Path& p = b.paths[t];
      f.self_flow[t][p.front()] -= x;
      for (std::size_t j = 0; j + 1 < p.size(); ++j) arc_flow(t, p[j], p[j + 1]) -= x;
    }
    f.lambda -= x;
    out.x[b] += x;
    ++st.extractions;
    record();
  }
  return out;
}

}  // namespace netfun
