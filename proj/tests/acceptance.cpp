#include <chrono>
#include <cstdio>
#include <functional>
#include <sstream>
#include <string>

#include "support/support.hpp"

using namespace netfun;
using support::Rng;

namespace {

struct Outcome {
  bool ok = true;
  std::string detail;
};

int failures = 0;

void report(int id, const char* title, double limit_s, const std::function<Outcome()>& body) {
  const auto start = std::chrono::steady_clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  if (secs >= limit_s) {
    out.ok = false;
    out.detail += " (over the time limit)";
  }
  if (!out.ok) ++failures;
  std::printf("criterion %d %s: %s  %.2fs of %.0fs  %s\n", id, title, out.ok ? "PASS" : "FAIL",
              secs, limit_s, out.detail.c_str());
  std::fflush(stdout);
}

ApproxParams params(double eps, bool trace = false) {
  ApproxParams p;
  p.epsilon = eps;
  p.record_trace = trace;
  return p;
}

// Adds a circulation of type t through v over nodes that carry no flow of t,
// if one fits into the spare capacity. Returns the number of arcs touched.
int inject_cycle(const Network& net, const ComputationTree& tree, NodeArcSolution& sol,
                 TypeId t, NodeId v) {
  const int n = net.num_nodes();
  std::vector<char> clean(n, 1);
  for (const Arc& a : [&] {
         std::vector<Arc> all;
         for (int s = 0; s < net.num_arc_slots(); ++s)
           if (net.is_arc_slot_used(s)) all.push_back(net.arc(s));
         return all;
       }()) {
    if (sgn(sol.arc_flow[t][a.index]) != 0) clean[a.from] = clean[a.to] = 0;
  }
  for (NodeId u = 0; u < n; ++u) {
    if (sgn(sol.self_flow[t][u]) != 0) clean[u] = 0;
  }
  clean[v] = 0;
  std::vector<Rational> load(net.num_edges(), Rational(0));
  for (int s = 0; s < net.num_arc_slots(); ++s) {
    if (!net.is_arc_slot_used(s)) continue;
    for (TypeId k = 0; k < tree.num_types(); ++k) load[net.arc(s).edge] += sol.arc_flow[k][s];
  }
  // Depth-first search for v -> clean nodes -> v.
  std::vector<NodeId> path{v};
  std::vector<char> on(n, 0);
  std::vector<NodeId> found;
  std::function<bool()> go = [&]() -> bool {
    const NodeId x = path.back();
    for (const Arc& a : net.out_arcs(x)) {
      if (a.to == v && path.size() >= 2) {
        found = path;
        return true;
      }
      if (a.to == v || !clean[a.to] || on[a.to]) continue;
      on[a.to] = 1;
      path.push_back(a.to);
      if (go()) return true;
      path.pop_back();
      on[a.to] = 0;
    }
    return false;
  };
  if (!go()) return 0;
  found.push_back(v);
  std::vector<Rational> extra(net.num_edges(), Rational(0));
  for (std::size_t j = 0; j + 1 < found.size(); ++j) extra[net.arc_between(found[j], found[j + 1])->edge] += 1;
  Rational y = -1;
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    if (sgn(extra[e]) == 0) continue;
    Rational room = (net.edge(e).cap - load[e]) / extra[e] / 2;
    if (y < 0 || room < y) y = room;
  }
  if (sgn(y) <= 0) return 0;
  for (std::size_t j = 0; j + 1 < found.size(); ++j) {
    sol.arc_flow[t][net.arc_between(found[j], found[j + 1])->index] += y;
  }
  return static_cast<int>(found.size()) - 1;
}

}  // namespace

int main() {
  report(1, "butterfly rate", 1.0, [] {
    auto inst = support::load("butterfly.json");
    const auto& t = inst.trees[0];
    const Rational ee = solve_embedding_edge_exact(inst.net, t, 100000).lambda;
    const Rational na = solve_node_arc(inst.net, t).lambda;
    auto ap = approx_max_rate(inst.net, t, params(0.05));
    std::ostringstream d;
    d << "embedding-edge " << ee << ", node-arc " << na << ", approx " << to_double(ap.rate);
    return Outcome{ee == Rational(3, 2) && na == Rational(3, 2) &&
                       ap.rate >= Rational(1425, 1000) && ap.rate <= Rational(3, 2),
                   d.str()};
  });

  report(2, "relay example", 1.0, [] {
    auto inst = support::load("relay.json");
    const auto& t = inst.trees[0];
    auto flows = flows_from_json(inst.net, {&t}, read_json_file(support::instances_dir() + "/relay_flows.json"));
    auto rounded = round_flows(flows, flows.total() / 1000);
    bool ok = rounded.frame == 2 && rounded.n == std::vector<std::int64_t>{2, 1};
    Schedule s = make_schedule(inst.net, t, rounded);
    const Embedding& b1 = s.flows.order[0];
    const Embedding& b2 = s.flows.order[1];
    const auto& d1 = s.delays[0];
    const auto& d2 = s.delays[1];
    // s1 0, s2 1, v 2, u 3, w 4, t 5
    const std::vector<std::pair<std::optional<int>, int>> delays = {
        {d1.at(b1, 0, 0, 2), 0}, {d1.at(b1, 1, 1, 2), 0}, {d1.at(b1, 2, 2, 4), 1},
        {d1.at(b1, 2, 4, 5), 2}, {d2.at(b2, 0, 0, 3), 0}, {d2.at(b2, 1, 1, 4), 0},
        {d2.at(b2, 0, 3, 4), 1}, {d2.at(b2, 2, 4, 5), 2}};
    int delay_hits = 0;
    for (const auto& [got, want] : delays) delay_hits += got && *got == want;
    ok &= delay_hits == 8;
    const std::int64_t K = 20;
    auto streams = random_streams(2, K * 3, 5, 2024);
    SimulationOptions opt;
    opt.record_trace = true;
    auto res = simulate(inst.net, t, s, K, streams, 5, opt);
    const bool values_ok = mismatches(t, res, streams, 5).empty() && res.delivered_count == K * 3;
    // Steady-state subframes in every frame from 2 to K.
    bool frames_ok = true;
    for (std::int64_t k = 2; k <= K; ++k) {
      std::vector<TraceEvent> uw, wt;
      for (const auto& e : res.trace) {
        if (e.frame != k) continue;
        if (e.from == 3 && e.to == 4) uw.push_back(e);
        if (e.from == 4 && e.to == 5) wt.push_back(e);
      }
      const bool uw_ok = k > K ? uw.empty()
                               : uw.size() == 1 && uw[0].embedding == 1 && uw[0].type == 0 &&
                                     uw[0].count == 1 && uw[0].source_frame == k - 1;
      const bool wt_ok = wt.size() == 2 && wt[0].embedding == 0 && wt[0].count == 2 &&
                         wt[0].type == 2 && wt[0].source_frame == k - 2 &&
                         wt[1].embedding == 1 && wt[1].count == 1 && wt[1].type == 2 &&
                         wt[1].source_frame == k - 2;
      frames_ok &= uw_ok && wt_ok;
    }
    std::ostringstream d;
    d << "N=" << rounded.frame << " n=(" << rounded.n[0] << "," << rounded.n[1] << ") delays "
      << delay_hits << "/8, delivered " << res.delivered_count << ", subframes "
      << (frames_ok ? "match" : "differ");
    return Outcome{ok && values_ok && frames_ok, d.str()};
  });

  report(3, "LP equivalence", 60.0, [] {
    Rng rng(1001);
    support::RandomSpec spec;
    spec.directed_fraction = 0.1;
    int agree = 0, decomposed = 0;
    const int total = 200;
    for (int it = 0; it < total; ++it) {
      auto ri = support::random_instance(rng, spec, 3000);
      const Rational ee = solve_embedding_edge_exact(ri.net, ri.tree, 100000).lambda;
      auto na = solve_node_arc(ri.net, ri.tree);
      agree += ee == na.lambda;
      auto out = decompose(ri.net, ri.tree, na);
      decomposed += out.total() == na.lambda && capacity_violations(ri.net, ri.tree, out).empty();
    }
    std::ostringstream d;
    d << agree << "/" << total << " equal optima, " << decomposed << "/" << total
      << " exact decompositions";
    return Outcome{agree == total && decomposed == total, d.str()};
  });

  report(4, "oracle correctness", 60.0, [] {
    Rng rng(2002);
    support::RandomSpec spec;
    spec.directed_fraction = 0.1;
    int edge_ok = 0, energy_ok = 0, pairs = 0;
    for (int it = 0; it < 100; ++it) {
      auto ri = support::random_instance(rng, spec, 3000);
      auto all = support::brute_embeddings(ri.net, ri.tree);
      auto listed = enumerate_embeddings(ri.net, ri.tree, 100000);
      const int g = ri.tree.num_types();
      for (int rep = 0; rep < 5; ++rep, ++pairs) {
        auto len = support::random_lengths(rng, ri.net.num_edges());
        Rational best = -1, listed_best = -1;
        for (const auto& b : all) {
          Rational w = support::brute_weight(ri.net, b, len);
          if (best < 0 || w < best) best = w;
        }
        for (const auto& b : listed) {
          Rational w = embedding_weight(ri.net, ri.tree, b, len);
          if (listed_best < 0 || w < listed_best) listed_best = w;
        }
        auto r = optimal_embedding(ri.net, ri.tree, len);
        edge_ok += r.weight == best && listed_best == best && support::brute_weight(ri.net, r.embedding, len) == best;

        EnergyModel em;
        em.budget.assign(ri.net.num_nodes(), Rational(1));
        for (int t = 0; t < g; ++t) {
          em.compute.push_back(make_rational(support::uniform(rng, 0, 4), support::uniform(rng, 1, 3)));
          em.transmit.push_back(make_rational(support::uniform(rng, 0, 4), support::uniform(rng, 1, 3)));
          em.receive.push_back(make_rational(support::uniform(rng, 0, 4), support::uniform(rng, 1, 3)));
        }
        std::vector<std::optional<Rational>> l(ri.net.num_nodes());
        for (auto& x : l) x = make_rational(support::uniform(rng, 0, 12), support::uniform(rng, 1, 5));
        std::optional<Rational> ebest;
        for (const auto& b : all) {
          auto w = support::brute_energy_weight(ri.net, b, em, l);
          if (w && (!ebest || *w < *ebest)) ebest = w;
        }
        auto er = optimal_embedding_energy<Rational>(ri.net, ri.tree, l, em.compute, em.transmit,
                                                     em.receive);
        energy_ok += ebest && er.weight == *ebest &&
                     support::brute_energy_weight(ri.net, er.embedding, em, l) == ebest;
      }
    }
    std::ostringstream d;
    d << edge_ok << "/" << pairs << " link-length pairs, " << energy_ok << "/" << pairs
      << " node-length pairs";
    return Outcome{edge_ok == pairs && energy_ok == pairs && pairs >= 500, d.str()};
  });

  report(5, "primal-dual guarantee", 120.0, [] {
    Rng rng(3003);
    int runs = 0, within = 0, monotone = 0, bounded = 0;
    double worst = 1.0;
    for (int it = 0; it < 100; ++it) {
      auto ri = support::random_instance(rng, {}, 3000);
      const Rational opt = solve_embedding_edge_exact(ri.net, ri.tree, 100000).lambda;
      for (double eps : {0.3, 0.1, 0.05}) {
        ++runs;
        auto r = approx_max_rate(ri.net, ri.tree, params(eps, true));
        const double ratio = to_double(r.rate) / to_double(opt);
        worst = std::min(worst, ratio);
        within += r.rate <= opt && to_double(r.rate) >= (1.0 - eps) * to_double(opt);
        bool up = true;
        for (std::size_t i = 1; i < r.trace.size(); ++i) up &= r.trace[i].log_dual > r.trace[i - 1].log_dual;
        monotone += up;
        bounded += r.iterations <= r.iteration_bound;
      }
    }
    std::ostringstream d;
    d << within << "/" << runs << " within bounds (worst ratio " << worst << "), " << monotone
      << " monotone duals, " << bounded << " within the iteration bound";
    return Outcome{within == runs && monotone == runs && bounded == runs, d.str()};
  });

  report(6, "extension reductions", 120.0, [] {
    Rng rng(4004);
    int precision = 0, concurrent = 0, multi = 0, approx_same = 0;
    const int total = 50;
    for (int it = 0; it < total; ++it) {
      auto ri = support::random_instance(rng, {}, 1500);
      const Rational base = solve_embedding_edge_exact(ri.net, ri.tree, 100000).lambda;
      std::vector<Rational> ones(ri.tree.num_types(), Rational(1));
      precision += precision_exact(ri.net, ri.tree, ones, 100000).lambda == base &&
                   precision_node_arc(ri.net, ri.tree, ones).lambda == base;
      MultiTerminalInstance single;
      single.mode = MultiTerminalMode::kConcurrent;
      single.terminals.push_back({ri.net.terminal(), ri.net.sources(), ri.tree, 1});
      concurrent += concurrent_exact(ri.net, single, 100000).value == base;
      multi += multi_tree_exact(ri.net, {ri.tree, ri.tree}, 100000).rate == base;
      approx_same += precision_approx(ri.net, ri.tree, ones, params(0.2)).rate ==
                     approx_max_rate(ri.net, ri.tree, params(0.2)).rate;
    }
    // Disjoint components joined by a directed zero-capacity link.
    int disjoint = 0;
    const int pairs = 10;
    for (int it = 0; it < pairs; ++it) {
      auto a = support::random_instance(rng, {}, 400);
      auto b = support::random_instance(rng, {}, 400);
      const Rational oa = solve_embedding_edge_exact(a.net, a.tree, 100000).lambda;
      const Rational ob = solve_embedding_edge_exact(b.net, b.tree, 100000).lambda;
      std::vector<Edge> edges = a.net.edges();
      const int off = a.net.num_nodes();
      for (Edge e : b.net.edges()) {
        e.u += off;
        e.v += off;
        edges.push_back(e);
      }
      edges.push_back({a.net.terminal(), b.net.terminal() + off, Rational(0), true});
      Network joined(off + b.net.num_nodes(), edges, a.net.sources(), a.net.terminal());
      std::vector<NodeId> sb;
      for (NodeId s : b.net.sources()) sb.push_back(s + off);
      MultiTerminalInstance m;
      m.terminals.push_back({a.net.terminal(), a.net.sources(), a.tree, 1});
      m.terminals.push_back({b.net.terminal() + off, sb, b.tree, 1});
      disjoint += weighted_sum_exact(joined, m, 100000).value == oa + ob;
    }
    std::ostringstream d;
    d << "precision " << precision << "/" << total << ", concurrent " << concurrent << "/" << total
      << ", duplicate trees " << multi << "/" << total << ", approx precision " << approx_same
      << "/" << total << ", disjoint weighted sum " << disjoint << "/" << pairs;
    return Outcome{precision == total && concurrent == total && multi == total &&
                       approx_same == total && disjoint == pairs,
                   d.str()};
  });

  report(7, "protocol correctness", 120.0, [] {
    Rng rng(5005);
    int correct = 0, loads = 0, rates = 0;
    const int total = 50;
    const std::int64_t K = 10;
    for (int it = 0; it < total; ++it) {
      const bool binary = it % 2 == 0;
      const Symbol q = binary ? 2 : 5;
      auto ri = support::random_instance(rng, {}, 3000, binary);
      auto all = support::brute_embeddings(ri.net, ri.tree);
      auto f = support::random_feasible_flows(rng, ri.net, all);
      const Rational eps = f.total() / 1000;
      auto s = make_schedule(ri.net, ri.tree, round_flows(f, eps));
      const auto per = s.flows.symbols_per_frame();
      auto streams = random_streams(ri.tree.kappa(), K * per, q, 7000 + it);
      auto res = simulate(ri.net, ri.tree, s, K, streams, q);
      bool good = res.delivered_count == K * per;
      for (std::int64_t i = 0; good && i < K * per; ++i) {
        std::vector<Symbol> col;
        for (int l = 0; l < ri.tree.kappa(); ++l) col.push_back(streams[l][i]);
        good = res.delivered[i] && res.outputs[i] == support::direct_value(ri.tree, col, q);
      }
      correct += good;
      bool within = true;
      for (const auto& frame : res.load) {
        for (int e = 0; e < ri.net.num_edges(); ++e) {
          within &= Rational(frame[e]) <= ri.net.edge(e).cap * Rational(s.flows.frame);
        }
      }
      loads += within;
      rates += make_rational(per, s.flows.frame) > f.total() - eps;
    }
    std::ostringstream d;
    d << correct << "/" << total << " exact outputs, " << loads << " within link loads, " << rates
      << " above the rounded rate";
    return Outcome{correct == total && loads == total && rates == total, d.str()};
  });

  report(8, "decomposition internals", 60.0, [] {
    Rng rng(6006);
    int unchanged = 0, clean_checks = 0, decreasing = 0, fixtures = 0;
    std::int64_t cycles = 0;
    const int total = 60;
    for (int it = 0; it < total; ++it) {
      auto ri = support::random_instance(rng, {}, 3000);
      auto na = solve_node_arc(ri.net, ri.tree);
      auto reference = decompose(ri.net, ri.tree, na);
      auto dirty = na;
      int injected = 0;
      for (TypeId t = 0; t < ri.tree.num_types(); ++t) {
        for (NodeId v = 0; v < ri.net.num_nodes(); ++v) {
          bool touched = sgn(dirty.self_flow[t][v]) != 0;
          for (const Arc& a : ri.net.in_arcs(v)) touched |= sgn(dirty.arc_flow[t][a.index]) != 0;
          if (touched && inject_cycle(ri.net, ri.tree, dirty, t, v) > 0) ++injected;
        }
      }
      fixtures += injected > 0;
      DecomposeOptions opt;
      opt.check_invariants = true;
      DecomposeStats st;
      auto out = decompose(ri.net, ri.tree, dirty, opt, &st);
      unchanged += out.x == reference.x;
      clean_checks += st.invariant_failures == 0;
      bool down = true;
      for (std::size_t i = 1; i < st.nonzero_history.size(); ++i) {
        down &= st.nonzero_history[i] < st.nonzero_history[i - 1];
      }
      decreasing += down;
      cycles += st.cycles_removed;
    }
    std::ostringstream d;
    d << unchanged << "/" << total << " unchanged with circulations on " << fixtures
      << " instances (" << cycles << " cycles cancelled), " << clean_checks
      << " with clean invariant checks, " << decreasing << " strictly decreasing";
    return Outcome{unchanged == total && clean_checks == total && decreasing == total &&
                       fixtures > 0 && cycles > 0,
                   d.str()};
  });

  std::printf("%s\n", failures == 0 ? "all criteria PASS" : "some criteria FAIL");
  return failures == 0 ? 0 : 1;
}
