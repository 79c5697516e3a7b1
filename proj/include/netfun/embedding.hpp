#pragma once

#include <compare>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "netfun/error.hpp"
#include "netfun/network.hpp"
#include "netfun/rational.hpp"
#include "netfun/tree.hpp"

namespace netfun {

using Path = std::vector<NodeId>;

// B: Gamma -> paths, indexed by type. `tree` selects the schema when several
// trees (or several terminals) share one flow map.
struct Embedding {
  int tree = 0;
  std::vector<Path> paths;

  const Path& path(TypeId t) const { return paths.at(t); }
  NodeId start(TypeId t) const { return paths.at(t).front(); }
  NodeId end(TypeId t) const { return paths.at(t).back(); }

  auto operator<=>(const Embedding&) const = default;
  bool operator==(const Embedding&) const = default;
};

// Canonical serialization: "tree|p_1;p_2;..." with comma-separated node ids.
inline std::string canonical_key(const Embedding& b) {
  std::string out = std::to_string(b.tree) + "|";
  for (std::size_t t = 0; t < b.paths.size(); ++t) {
    if (t) out += ';';
    for (std::size_t j = 0; j < b.paths[t].size(); ++j) {
      if (j) out += ',';
      out += std::to_string(b.paths[t][j]);
    }
  }
  return out;
}

// Sparse x(B) over embeddings, ordered canonically.
struct EmbeddingFlows {
  std::map<Embedding, Rational> x;

  Rational total() const {
    Rational sum = 0;
    for (const auto& [b, v] : x) sum += v;
    return sum;
  }
  bool empty() const { return x.empty(); }
};

inline Status validate_instance(const Network& net, const ComputationTree& tree) {
  if (Status s = validate_network(net); !s) return s;
  if (Status s = validate_tree(tree); !s) return s;
  if (tree.kappa() != net.kappa()) {
    return Status::fail(ErrorCode::kBadSourceTerminal,
                        "tree has " + std::to_string(tree.kappa()) +
                            " sources but the network has " + std::to_string(net.kappa()));
  }
  return Status::success();
}

inline Status validate_embedding(const Network& net, const ComputationTree& tree,
                                 const Embedding& b) {
  auto bad = [](std::string msg) {
    return Status::fail(ErrorCode::kInvalidEmbedding, std::move(msg));
  };
  if (static_cast<int>(b.paths.size()) != tree.num_types()) {
    return bad("embedding maps " + std::to_string(b.paths.size()) + " types, tree has " +
               std::to_string(tree.num_types()));
  }
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    const Path& p = b.paths[t];
    if (p.empty()) return bad("empty path for type " + tree.edge(t).name);
    for (NodeId v : p) {
      if (!net.in_range(v)) return bad("unknown node in path for " + tree.edge(t).name);
    }
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      if (!net.arc_between(p[j], p[j + 1])) {
        return bad("no usable link " + net.name(p[j]) + "->" + net.name(p[j + 1]) +
                   " in path for " + tree.edge(t).name);
      }
    }
    if (tree.is_source_type(t) && p.front() != net.source(t)) {
      return bad("path for " + tree.edge(t).name + " does not start at its source");
    }
    for (TypeId pre : tree.pre(t)) {
      if (b.paths[pre].back() != p.front()) {
        return bad("path for " + tree.edge(pre).name + " does not end where " +
                   tree.edge(t).name + " starts");
      }
    }
  }
  if (b.paths.back().back() != net.terminal()) {
    return bad("final type does not end at the terminal");
  }
  return Status::success();
}

// r_B(e): uses of each edge, counting every traversal.
using UsageProfile = std::vector<int>;

inline UsageProfile edge_usage(const Network& net, const ComputationTree& tree,
                               const Embedding& b) {
  validate_embedding(net, tree, b).throw_if_error();
  UsageProfile r(net.num_edges(), 0);
  for (const Path& p : b.paths) {
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      r[net.arc_between(p[j], p[j + 1])->edge] += 1;
    }
  }
  return r;
}

// Per-type weighted usage: sum over types crossing e of w(theta).
template <class W>
std::vector<W> weighted_edge_usage(const Network& net, const ComputationTree& tree,
                                   const Embedding& b,
                                   std::span<const W> type_weights) {
  validate_embedding(net, tree, b).throw_if_error();
  std::vector<W> r(net.num_edges(), W(0));
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    const Path& p = b.paths[t];
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      r[net.arc_between(p[j], p[j + 1])->edge] += type_weights[t];
    }
  }
  return r;
}

template <class W>
W embedding_weight(const Network& net, const ComputationTree& tree, const Embedding& b,
                   std::span<const W> lengths) {
  if (static_cast<int>(lengths.size()) != net.num_edges()) {
    throw Error(ErrorCode::kDimensionMismatch,
                "length function has " + std::to_string(lengths.size()) +
                    " entries for " + std::to_string(net.num_edges()) + " edges");
  }
  UsageProfile r = edge_usage(net, tree, b);
  W total = W(0);
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    if (r[e] != 0) total += W(r[e]) * lengths[e];
  }
  return total;
}

inline Rational embedding_weight(const Network& net, const ComputationTree& tree,
                                 const Embedding& b, const std::vector<Rational>& lengths) {
  return embedding_weight<Rational>(net, tree, b, std::span<const Rational>(lengths));
}

// All simple paths from a to b along usable arcs, in lexicographic order.
inline std::vector<std::vector<std::vector<Path>>> all_simple_paths(const Network& net) {
  const int n = net.num_nodes();
  std::vector<std::vector<std::vector<Path>>> out(n, std::vector<std::vector<Path>>(n));
  std::vector<char> on_path(n, 0);
  Path current;
  std::function<void(NodeId)> dfs = [&](NodeId v) {
    out[current.front()][v].push_back(current);
    for (const Arc& a : net.out_arcs(v)) {
      if (on_path[a.to]) continue;
      on_path[a.to] = 1;
      current.push_back(a.to);
      dfs(a.to);
      current.pop_back();
      on_path[a.to] = 0;
    }
  };
  for (NodeId s = 0; s < n; ++s) {
    current.assign(1, s);
    on_path[s] = 1;
    dfs(s);
    on_path[s] = 0;
  }
  return out;
}

// Every embedding whose per-type paths are simple. Throws TooMany if more
// than `cap` exist.
inline std::vector<Embedding> enumerate_embeddings(const Network& net,
                                                   const ComputationTree& tree,
                                                   std::size_t cap, int tree_index = 0) {
  const int n = net.num_nodes();
  const auto paths = all_simple_paths(net);
  const int root = tree.num_nodes() - 1;
  const int kappa = tree.kappa();
  const int num_internal = root - kappa;

  std::vector<NodeId> loc(tree.num_nodes(), 0);
  for (int l = 0; l < kappa; ++l) loc[l] = net.source(l);
  loc[root] = net.terminal();

  // Visits every placement of the internal tree nodes.
  auto for_each_placement = [&](auto&& visit) {
    std::vector<int> digits(num_internal, 0);
    while (true) {
      for (int i = 0; i < num_internal; ++i) loc[kappa + i] = digits[i];
      if (!visit()) return;
      int pos = num_internal - 1;
      while (pos >= 0 && ++digits[pos] == n) digits[pos--] = 0;
      if (pos < 0) return;
    }
  };

  const std::uint64_t limit = cap;
  std::uint64_t count = 0;
  bool too_many = false;
  for_each_placement([&]() {
    std::uint64_t product = 1;
    for (TypeId t = 0; t < tree.num_types(); ++t) {
      std::uint64_t k = paths[loc[tree.tail(t)]][loc[tree.head(t)]].size();
      if (k == 0) return true;
      if (product > (limit + 1) / k + 1) {
        too_many = true;
        return false;
      }
      product *= k;
    }
    count += product;
    if (count > limit) {
      too_many = true;
      return false;
    }
    return true;
  });
  if (too_many) {
    throw Error(ErrorCode::kTooMany,
                "more than " + std::to_string(cap) + " embeddings");
  }

  std::vector<Embedding> result;
  result.reserve(count);
  for_each_placement([&]() {
    std::vector<const std::vector<Path>*> options(tree.num_types());
    for (TypeId t = 0; t < tree.num_types(); ++t) {
      options[t] = &paths[loc[tree.tail(t)]][loc[tree.head(t)]];
      if (options[t]->empty()) return true;
    }
    std::vector<std::size_t> pick(tree.num_types(), 0);
    while (true) {
      Embedding b;
      b.tree = tree_index;
      b.paths.reserve(tree.num_types());
      for (TypeId t = 0; t < tree.num_types(); ++t) b.paths.push_back((*options[t])[pick[t]]);
      result.push_back(std::move(b));
      int pos = tree.num_types() - 1;
      while (pos >= 0 && ++pick[pos] == options[pos]->size()) pick[pos--] = 0;
      if (pos < 0) break;
    }
    return true;
  });
  std::sort(result.begin(), result.end());
  return result;
}

}  // namespace netfun
