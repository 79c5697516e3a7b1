#include <gtest/gtest.h>

#include "support/support.hpp"

using namespace netfun;
using support::Rng;

namespace {

void expect_strictly_decreasing(const std::vector<std::int64_t>& h) {
  for (std::size_t i = 1; i < h.size(); ++i) EXPECT_LT(h[i], h[i - 1]) << "step " << i;
}

}  // namespace

TEST(Decompose, SingleEmbeddingRoundTrip) {
  auto inst = support::load("diamond.json");
  const auto& tree = inst.trees[0];
  // Diamond nodes: s1 0, s2 1, a 2, t 3; compute at a.
  Embedding b{0, {{0, 2}, {1, 2}, {2, 3}}};
  EmbeddingFlows f;
  f.x[b] = 1;
  auto out = decompose(inst.net, tree, flows_to_node_arc(inst.net, tree, f));
  ASSERT_EQ(out.x.size(), 1u);
  EXPECT_EQ(out.x.begin()->first, b);
  EXPECT_EQ(out.x.begin()->second, Rational(1));
}

TEST(Decompose, TriangleCirculationIsRemoved) {
  // Diamond on s1 2, s2 3, a 4, t 5 plus a triangle a-x-y with x 0, y 1, so
  // the walk at a meets the circulation before the real predecessor.
  std::vector<Edge> edges = {{2, 4, 1, false}, {3, 4, 1, false}, {4, 5, 1, false},
                             {4, 0, 1, false}, {0, 1, 1, false}, {1, 4, 1, false}};
  Network net(6, edges, {2, 3}, 5);
  auto tree = support::load("diamond.json").trees[0];
  Embedding b{0, {{2, 4}, {3, 4}, {4, 5}}};
  EmbeddingFlows f;
  f.x[b] = 1;
  auto clean = flows_to_node_arc(net, tree, f);
  auto dirty = clean;
  // First source type around a -> x -> y -> a.
  const Rational y(1, 3);
  dirty.arc_flow[0][net.arc_between(4, 0)->index] += y;
  dirty.arc_flow[0][net.arc_between(0, 1)->index] += y;
  dirty.arc_flow[0][net.arc_between(1, 4)->index] += y;
  ASSERT_TRUE(verify_node_arc(net, tree, dirty).empty());
  DecomposeStats st;
  DecomposeOptions opt;
  opt.check_invariants = true;
  auto out = decompose(net, tree, dirty, opt, &st);
  EXPECT_EQ(out.x, decompose(net, tree, clean).x);
  EXPECT_EQ(out.x.begin()->first, b);
  EXPECT_EQ(st.cycles_removed, 1);
  EXPECT_EQ(st.invariant_failures, 0);
  expect_strictly_decreasing(st.nonzero_history);
}

TEST(Decompose, ZeroSolutionGivesEmptyFlows) {
  auto inst = support::load("relay.json");
  auto out = decompose(inst.net, inst.trees[0], NodeArcSolution::zero(inst.net, inst.trees[0]));
  EXPECT_TRUE(out.empty());
}

TEST(Decompose, RejectsInfeasibleInput) {
  auto inst = support::load("diamond.json");
  auto bad = NodeArcSolution::zero(inst.net, inst.trees[0]);
  bad.lambda = 1;
  try {
    decompose(inst.net, inst.trees[0], bad);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInfeasibleInput);
  }
}

TEST(Decompose, RelayFlowsRoundTrip) {
  auto inst = support::load("relay.json");
  const auto& tree = inst.trees[0];
  EmbeddingFlows f;
  f.x[Embedding{0, {{0, 2}, {1, 2}, {2, 4, 5}}}] = 1;
  f.x[Embedding{0, {{0, 3, 4}, {1, 4}, {4, 5}}}] = Rational(1, 2);
  auto out = decompose(inst.net, tree, flows_to_node_arc(inst.net, tree, f));
  EXPECT_EQ(out.x, f.x);
}

TEST(DecomposeProperty, NodeArcOptimumDecomposes) {
  Rng rng(29);
  support::RandomSpec spec;
  spec.directed_fraction = 0.15;
  for (int it = 0; it < 40; ++it) {
    auto ri = support::random_instance(rng, spec);
    auto na = solve_node_arc(ri.net, ri.tree);
    DecomposeStats st;
    DecomposeOptions opt;
    opt.check_invariants = true;
    auto out = decompose(ri.net, ri.tree, na, opt, &st);
    EXPECT_EQ(out.total(), na.lambda);
    EXPECT_TRUE(capacity_violations(ri.net, ri.tree, out).empty());
    for (const auto& [b, x] : out.x) {
      EXPECT_TRUE(validate_embedding(ri.net, ri.tree, b).ok());
      EXPECT_GT(sgn(x), 0);
    }
    EXPECT_EQ(st.invariant_failures, 0);
    expect_strictly_decreasing(st.nonzero_history);
  }
}

TEST(DecomposeProperty, RoundTripRecoversRate) {
  Rng rng(31);
  for (int it = 0; it < 60; ++it) {
    auto ri = support::random_instance(rng);
    auto all = support::brute_embeddings(ri.net, ri.tree);
    auto f = support::random_feasible_flows(rng, ri.net, all);
    auto out = decompose(ri.net, ri.tree, flows_to_node_arc(ri.net, ri.tree, f));
    EXPECT_EQ(out.total(), f.total());
    // Both flows induce the same per-edge loads only up to rerouting, but
    // never exceed the original node-arc loads.
    EXPECT_TRUE(capacity_violations(ri.net, ri.tree, out).empty());
  }
}

TEST(DecomposeProperty, WalkEffortGrowsPolynomially) {
  // Chains with growing length, one embedding per chain length.
  std::vector<double> ratio;
  for (int n : {6, 12, 24}) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, Rational(1), false});
    Network net(n, edges, {0, 1}, n - 1);
    auto tree = support::load("diamond.json").trees[0];
    auto na = solve_node_arc(net, tree);
    DecomposeStats st;
    decompose(net, tree, na, {}, &st);
    const double k = tree.kappa();
    const double m = net.num_edges();
    ratio.push_back(static_cast<double>(st.walk_steps) / (k * k * m * m));
  }
  for (std::size_t i = 1; i < ratio.size(); ++i) EXPECT_LE(ratio[i], ratio[0] * 1.5);
}
