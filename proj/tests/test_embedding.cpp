#include <gtest/gtest.h>

#include <algorithm>

#include "support/support.hpp"

using namespace netfun;
using support::Rng;

namespace {

Embedding relay_b1() { return Embedding{0, {{0, 2}, {1, 2}, {2, 4, 5}}}; }
Embedding relay_b2() { return Embedding{0, {{0, 3, 4}, {1, 4}, {4, 5}}}; }

}  // namespace

TEST(Embedding, ValidateRelayEmbeddings) {
  auto inst = support::load("relay.json");
  EXPECT_TRUE(validate_embedding(inst.net, inst.trees[0], relay_b1()).ok());
  EXPECT_TRUE(validate_embedding(inst.net, inst.trees[0], relay_b2()).ok());
}

TEST(Embedding, RejectsBrokenEmbeddings) {
  auto inst = support::load("relay.json");
  const auto& tree = inst.trees[0];
  Embedding wrong_source{0, {{1, 2}, {1, 2}, {2, 4, 5}}};
  EXPECT_EQ(validate_embedding(inst.net, tree, wrong_source).code, ErrorCode::kInvalidEmbedding);
  Embedding gap{0, {{0, 2}, {1, 4}, {2, 4, 5}}};
  EXPECT_EQ(validate_embedding(inst.net, tree, gap).code, ErrorCode::kInvalidEmbedding);
  Embedding no_link{0, {{0, 2}, {1, 2}, {2, 5}}};
  EXPECT_EQ(validate_embedding(inst.net, tree, no_link).code, ErrorCode::kInvalidEmbedding);
  Embedding not_terminal{0, {{0, 2}, {1, 2}, {2, 4}}};
  EXPECT_EQ(validate_embedding(inst.net, tree, not_terminal).code, ErrorCode::kInvalidEmbedding);
  Embedding short_map{0, {{0, 2}, {1, 2}}};
  EXPECT_EQ(validate_embedding(inst.net, tree, short_map).code, ErrorCode::kInvalidEmbedding);
}

TEST(Embedding, UsageAndWeight) {
  auto inst = support::load("relay.json");
  const auto& tree = inst.trees[0];
  // Edges: s1v, s2v, vw, wt, s1u, uw, s2w.
  EXPECT_EQ(edge_usage(inst.net, tree, relay_b1()), (UsageProfile{1, 1, 1, 1, 0, 0, 0}));
  EXPECT_EQ(edge_usage(inst.net, tree, relay_b2()), (UsageProfile{0, 0, 0, 1, 1, 1, 1}));
  std::vector<Rational> len{1, 2, 3, 4, 5, 6, 7};
  EXPECT_EQ(embedding_weight(inst.net, tree, relay_b1(), len), Rational(10));
  EXPECT_EQ(embedding_weight(inst.net, tree, relay_b2(), len), Rational(22));
  EXPECT_THROW(embedding_weight(inst.net, tree, relay_b1(), std::vector<Rational>{1}), Error);
}

TEST(Embedding, RepeatedEdgeCountsEachUse) {
  // Both sources route through the same link before the sum.
  Network net(4, {{0, 2, 1, false}, {1, 2, 1, false}, {2, 3, 1, false}}, {0, 1}, 3);
  ComputationTree tree({{"a", Operator::none()}, {"b", Operator::none()},
                        {"f", Operator::of(OpKind::kAdd)}, {"out", Operator::none()}},
                       {{"X", 0, 2}, {"Y", 1, 2}, {"Z", 2, 3}});
  Embedding late{0, {{0, 2, 3}, {1, 2, 3}, {3}}};
  EXPECT_EQ(edge_usage(net, tree, late), (UsageProfile{1, 1, 2}));
}

TEST(Embedding, CanonicalOrderIsStable) {
  EXPECT_LT(relay_b1(), relay_b2());
  EXPECT_EQ(canonical_key(relay_b1()), "0|0,2;1,2;2,4,5");
}

TEST(Embedding, LineHasThreeEmbeddings) {
  auto inst = support::load("line.json");
  auto all = enumerate_embeddings(inst.net, inst.trees[0], 1000);
  EXPECT_EQ(all.size(), 3u);
}

TEST(Embedding, EnumerateCapThrows) {
  auto inst = support::load("relay.json");
  EXPECT_THROW(enumerate_embeddings(inst.net, inst.trees[0], 2), Error);
}

TEST(EmbeddingProperty, EnumerationMatchesBruteForce) {
  Rng rng(21);
  support::RandomSpec spec;
  spec.directed_fraction = 0.2;
  for (int it = 0; it < 80; ++it) {
    auto ri = support::random_instance(rng, spec);
    auto lib = enumerate_embeddings(ri.net, ri.tree, 100000);
    auto brute = support::brute_embeddings(ri.net, ri.tree);
    std::sort(brute.begin(), brute.end());
    ASSERT_EQ(lib, brute);
    for (const auto& b : lib) {
      ASSERT_TRUE(validate_embedding(ri.net, ri.tree, b).ok());
      auto r = edge_usage(ri.net, ri.tree, b);
      auto rb = support::brute_usage(ri.net, b);
      for (int e = 0; e < ri.net.num_edges(); ++e) ASSERT_EQ(Rational(r[e]), rb[e]);
    }
  }
}

TEST(Oracle, RelayUnitLengths) {
  auto inst = support::load("relay.json");
  std::vector<Rational> len(inst.net.num_edges(), Rational(1));
  auto r = optimal_embedding(inst.net, inst.trees[0], len);
  EXPECT_EQ(r.weight, Rational(4));
  EXPECT_EQ(embedding_weight(inst.net, inst.trees[0], r.embedding, len), r.weight);
}

TEST(Oracle, ZeroLengthsGiveZeroWeight) {
  auto inst = support::load("butterfly.json");
  std::vector<Rational> len(inst.net.num_edges(), Rational(0));
  EXPECT_EQ(optimal_embedding(inst.net, inst.trees[0], len).weight, Rational(0));
}

TEST(Oracle, UnreachableTerminal) {
  // Directed away from the terminal.
  Network net(2, {{1, 0, 1, true}}, {0}, 1);
  ComputationTree tree({{"s", Operator::none()}, {"out", Operator::none()}}, {{"X", 0, 1}});
  std::vector<Rational> len{1};
  try {
    optimal_embedding(net, tree, len);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnreachable);
  }
}

TEST(Oracle, DimensionMismatch) {
  auto inst = support::load("relay.json");
  try {
    optimal_embedding(inst.net, inst.trees[0], std::vector<Rational>{1, 2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kDimensionMismatch);
  }
}

TEST(Oracle, TablesDominatedByAnyPlacement) {
  auto inst = support::load("relay.json");
  const auto& tree = inst.trees[0];
  std::vector<Rational> len{1, 2, 3, 4, 5, 6, 7};
  OracleOptions<Rational> opt;
  opt.keep_tables = true;
  auto r = optimal_embedding<Rational>(inst.net, tree, len, opt);
  ASSERT_EQ(r.tables.size(), 3u);
  // The final value at the terminal is the weight; each table entry is at
  // most the cost of the embedding the oracle picked, restricted to its
  // prefix at that node.
  EXPECT_EQ(*r.tables[2].omega[inst.net.terminal()], r.weight);
  for (const auto& b : enumerate_embeddings(inst.net, tree, 1000)) {
    EXPECT_LE(r.weight, embedding_weight(inst.net, tree, b, len));
  }
}

TEST(OracleProperty, ScaleAndMonotonicity) {
  Rng rng(5);
  for (int it = 0; it < 60; ++it) {
    auto ri = support::random_instance(rng);
    auto len = support::random_lengths(rng, ri.net.num_edges());
    const Rational base = optimal_embedding(ri.net, ri.tree, len).weight;
    std::vector<Rational> scaled = len;
    for (auto& l : scaled) l *= Rational(7, 3);
    EXPECT_EQ(optimal_embedding(ri.net, ri.tree, scaled).weight, base * Rational(7, 3));
    std::vector<Rational> bigger = len;
    bigger[support::uniform(rng, 0, ri.net.num_edges() - 1)] += 1;
    EXPECT_GE(optimal_embedding(ri.net, ri.tree, bigger).weight, base);
  }
}

TEST(OracleProperty, OperationCountGrowsNearLinearly) {
  // Chains of growing length: counters should grow roughly like m log n.
  std::vector<double> per_edge;
  for (int n : {8, 16, 32, 64}) {
    std::vector<Edge> edges;
    for (int i = 0; i + 1 < n; ++i) edges.push_back({i, i + 1, Rational(1), false});
    for (int i = 0; i + 2 < n; i += 2) edges.push_back({i, i + 2, Rational(1), false});
    Network net(n, edges, {0, 1}, n - 1);
    ComputationTree tree({{"a", Operator::none()}, {"b", Operator::none()},
                          {"f", Operator::of(OpKind::kAdd)}, {"out", Operator::none()}},
                         {{"X", 0, 2}, {"Y", 1, 2}, {"Z", 2, 3}});
    std::vector<double> len(net.num_edges(), 1.0);
    OracleStats st;
    OracleOptions<double> opt;
    opt.stats = &st;
    optimal_embedding<double>(net, tree, len, opt);
    const double m = net.num_edges();
    per_edge.push_back(static_cast<double>(st.total()) / (tree.kappa() * (m + n * std::log2(n))));
  }
  for (std::size_t i = 1; i < per_edge.size(); ++i) EXPECT_LT(per_edge[i], 2.0 * per_edge[0]);
}
