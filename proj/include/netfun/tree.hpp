#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netfun/error.hpp"

namespace netfun {

using TypeId = int;  // index of a tree edge; each edge is one data type
using Symbol = std::uint32_t;

enum class OpKind { kNone, kAdd, kMul, kXor, kMin, kMax, kLookup };

// Function computed at an internal tree node from its in-edges, which are
// taken in increasing label order.
struct Operator {
  OpKind kind = OpKind::kNone;
  // kLookup only: value for input tuple (a_1..a_d), index = sum a_j q^(d-j).
  std::vector<Symbol> table;

  static Operator none() { return {}; }
  static Operator of(OpKind k) { return Operator{k, {}}; }
  static Operator lookup(std::vector<Symbol> table) {
    return Operator{OpKind::kLookup, std::move(table)};
  }
};

inline std::string op_name(OpKind k) {
  switch (k) {
    case OpKind::kNone: return "none";
    case OpKind::kAdd: return "add";
    case OpKind::kMul: return "mul";
    case OpKind::kXor: return "xor";
    case OpKind::kMin: return "min";
    case OpKind::kMax: return "max";
    case OpKind::kLookup: return "lookup";
  }
  return "none";
}

inline Symbol apply_operator(const Operator& op, std::span<const Symbol> in,
                             Symbol q) {
  switch (op.kind) {
    case OpKind::kAdd: {
      std::uint64_t acc = 0;
      for (Symbol s : in) acc = (acc + s) % q;
      return static_cast<Symbol>(acc);
    }
    case OpKind::kMul: {
      std::uint64_t acc = 1 % q;
      for (Symbol s : in) acc = (acc * s) % q;
      return static_cast<Symbol>(acc);
    }
    case OpKind::kXor: {
      Symbol acc = 0;
      for (Symbol s : in) acc ^= s;
      return acc;
    }
    case OpKind::kMin: {
      Symbol acc = in.empty() ? 0 : in[0];
      for (Symbol s : in) acc = s < acc ? s : acc;
      return acc;
    }
    case OpKind::kMax: {
      Symbol acc = 0;
      for (Symbol s : in) acc = s > acc ? s : acc;
      return acc;
    }
    case OpKind::kLookup: {
      std::uint64_t index = 0;
      for (Symbol s : in) index = index * q + s;
      return op.table.at(index);
    }
    case OpKind::kNone:
      break;
  }
  throw Error(ErrorCode::kBadOperator, "node has no operator");
}

struct TreeNode {
  std::string name;
  Operator op;
};

struct TreeEdge {
  std::string name;
  int tail = 0;
  int head = 0;
};

// Computation schema: nodes mu_1..mu_|Omega| and edges theta_1..theta_|Gamma|
// in label order. The first kappa nodes are the sources, the last node is the
// terminal, and edge l < kappa leaves source node l.
class ComputationTree {
 public:
  ComputationTree() = default;

  ComputationTree(std::vector<TreeNode> nodes, std::vector<TreeEdge> edges)
      : nodes_(std::move(nodes)), edges_(std::move(edges)) {
    const int num_nodes = static_cast<int>(nodes_.size());
    in_edges_.assign(num_nodes, {});
    out_edges_.assign(num_nodes, {});
    for (TypeId e = 0; e < num_types(); ++e) {
      const TreeEdge& te = edges_[e];
      if (te.tail >= 0 && te.tail < num_nodes) out_edges_[te.tail].push_back(e);
      if (te.head >= 0 && te.head < num_nodes) in_edges_[te.head].push_back(e);
    }
    kappa_ = 0;
    for (int i = 0; i < num_nodes; ++i) {
      if (in_edges_[i].empty() && !out_edges_[i].empty()) ++kappa_;
    }
    pre_.assign(num_types(), {});
    suc_.assign(num_types(), {});
    for (TypeId e = 0; e < num_types(); ++e) {
      const int tail = edges_[e].tail;
      const int head = edges_[e].head;
      if (tail >= 0 && tail < num_nodes) pre_[e] = in_edges_[tail];
      if (head >= 0 && head < num_nodes) suc_[e] = out_edges_[head];
    }
  }

  int num_nodes() const { return static_cast<int>(nodes_.size()); }
  int num_types() const { return static_cast<int>(edges_.size()); }
  int kappa() const { return kappa_; }
  TypeId final_type() const { return num_types() - 1; }
  bool is_source_type(TypeId t) const { return t < kappa_; }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  const std::vector<TreeEdge>& edges() const { return edges_; }
  const TreeNode& node(int i) const { return nodes_.at(i); }
  const TreeEdge& edge(TypeId t) const { return edges_.at(t); }
  int tail(TypeId t) const { return edges_.at(t).tail; }
  int head(TypeId t) const { return edges_.at(t).head; }

  const std::vector<TypeId>& in_edges(int node) const { return in_edges_.at(node); }
  const std::vector<TypeId>& out_edges(int node) const { return out_edges_.at(node); }

  // Pre(theta): edges whose head is the tail of theta, ascending.
  const std::vector<TypeId>& pre(TypeId t) const { return pre_.at(t); }
  // Suc(theta): edges whose tail is the head of theta.
  const std::vector<TypeId>& suc(TypeId t) const { return suc_.at(t); }

  // The operator producing type t (kNone for source types).
  const Operator& producer(TypeId t) const { return nodes_.at(tail(t)).op; }

  std::optional<TypeId> find_type(const std::string& name) const {
    for (TypeId t = 0; t < num_types(); ++t) {
      if (edges_[t].name == name) return t;
    }
    return std::nullopt;
  }

 private:
  std::vector<TreeNode> nodes_;
  std::vector<TreeEdge> edges_;
  std::vector<std::vector<TypeId>> in_edges_;
  std::vector<std::vector<TypeId>> out_edges_;
  std::vector<std::vector<TypeId>> pre_;
  std::vector<std::vector<TypeId>> suc_;
  int kappa_ = 0;
};

inline std::vector<TypeId> pre_edges(const ComputationTree& tree, TypeId t) {
  if (t < 0 || t >= tree.num_types()) {
    throw Error(ErrorCode::kUnknownEdge, "unknown tree edge " + std::to_string(t));
  }
  return tree.pre(t);
}

inline std::vector<TypeId> suc_edges(const ComputationTree& tree, TypeId t) {
  if (t < 0 || t >= tree.num_types()) {
    throw Error(ErrorCode::kUnknownEdge, "unknown tree edge " + std::to_string(t));
  }
  return tree.suc(t);
}

// Label checks are local: for every edge, its tail precedes its head and
// every predecessor edge has a smaller label. Both are O(|Gamma|).
inline Status validate_tree(const ComputationTree& tree) {
  const int num_nodes = tree.num_nodes();
  const int num_types = tree.num_types();
  if (num_nodes < 2 || num_types != num_nodes - 1) {
    return Status::fail(ErrorCode::kNotATree,
                        "a tree on " + std::to_string(num_nodes) + " nodes needs " +
                            std::to_string(num_nodes - 1) + " edges");
  }
  for (TypeId t = 0; t < num_types; ++t) {
    const TreeEdge& e = tree.edge(t);
    if (e.tail < 0 || e.tail >= num_nodes || e.head < 0 || e.head >= num_nodes ||
        e.tail == e.head) {
      return Status::fail(ErrorCode::kNotATree,
                          "edge " + e.name + " has invalid endpoints");
    }
  }
  // Every node must reach the last node by following its out-edge.
  const int root = num_nodes - 1;
  for (int i = 0; i < num_nodes; ++i) {
    int cur = i;
    int steps = 0;
    while (cur != root && steps <= num_nodes) {
      const auto& outs = tree.out_edges(cur);
      if (outs.size() != 1) break;
      cur = tree.head(outs[0]);
      ++steps;
    }
    if (cur != root) {
      // Could be a degree problem rather than a disconnected structure.
      if (tree.out_edges(cur).size() > 1 || steps > num_nodes) {
        return Status::fail(ErrorCode::kNotATree,
                            "node " + tree.node(i).name + " does not lead to the terminal");
      }
      return Status::fail(ErrorCode::kBadDegree,
                          "node " + tree.node(cur).name + " has out-degree " +
                              std::to_string(tree.out_edges(cur).size()));
    }
  }
  const int kappa = tree.kappa();
  if (kappa < 1) return Status::fail(ErrorCode::kBadDegree, "no source nodes");
  for (int i = 0; i < num_nodes; ++i) {
    const auto in = tree.in_edges(i).size();
    const auto out = tree.out_edges(i).size();
    const std::string& name = tree.node(i).name;
    if (i < kappa) {
      if (in != 0 || out != 1) {
        return Status::fail(ErrorCode::kBadDegree,
                            "source node " + name + " needs in-degree 0 and out-degree 1");
      }
    } else if (i == root) {
      if (in != 1 || out != 0) {
        return Status::fail(ErrorCode::kBadDegree,
                            "terminal node " + name + " needs in-degree 1 and out-degree 0");
      }
    } else if (in <= 1 || out != 1) {
      return Status::fail(ErrorCode::kBadDegree,
                          "node " + name + " has in-degree " + std::to_string(in) +
                              "; internal nodes need in-degree > 1 and out-degree 1");
    }
  }
  for (int l = 0; l < kappa; ++l) {
    if (tree.tail(l) != l) {
      return Status::fail(ErrorCode::kNotTopological,
                          "edge " + std::to_string(l + 1) + " does not leave source node " +
                              std::to_string(l + 1));
    }
  }
  if (tree.head(num_types - 1) != root) {
    return Status::fail(ErrorCode::kNotTopological,
                        "the last edge must enter the terminal node");
  }
  for (TypeId t = 0; t < num_types; ++t) {
    if (tree.tail(t) >= tree.head(t)) {
      return Status::fail(ErrorCode::kNotTopological,
                          "NotTopological(" + std::to_string(tree.head(t) + 1) + "," +
                              std::to_string(tree.tail(t) + 1) + "): node labels");
    }
    for (TypeId p : tree.pre(t)) {
      if (p >= t) {
        return Status::fail(ErrorCode::kNotTopological,
                            "NotTopological(" + std::to_string(t + 1) + "," +
                                std::to_string(p + 1) + "): edge labels");
      }
    }
  }
  for (int i = kappa; i < root; ++i) {
    if (tree.node(i).op.kind == OpKind::kNone) {
      return Status::fail(ErrorCode::kBadOperator,
                          "internal node " + tree.node(i).name + " has no operator");
    }
  }
  return Status::success();
}

// Operators must produce residues of the alphabet.
inline Status validate_operators(const ComputationTree& tree, Symbol q) {
  if (q < 2) return Status::fail(ErrorCode::kBadOperator, "alphabet size must be >= 2");
  for (int i = tree.kappa(); i + 1 < tree.num_nodes(); ++i) {
    const Operator& op = tree.node(i).op;
    if (op.kind == OpKind::kXor && (q & (q - 1)) != 0) {
      return Status::fail(ErrorCode::kBadOperator,
                          "xor needs a power-of-two alphabet at node " + tree.node(i).name);
    }
    if (op.kind == OpKind::kLookup) {
      std::uint64_t expected = 1;
      for (std::size_t j = 0; j < tree.in_edges(i).size(); ++j) expected *= q;
      if (op.table.size() != expected) {
        return Status::fail(ErrorCode::kBadOperator,
                            "lookup table at " + tree.node(i).name + " needs " +
                                std::to_string(expected) + " entries");
      }
      for (Symbol s : op.table) {
        if (s >= q) {
          return Status::fail(ErrorCode::kBadOperator,
                              "lookup value out of alphabet at " + tree.node(i).name);
        }
      }
    }
  }
  return Status::success();
}

// Ground truth: evaluates every type from one realization of the sources.
inline std::vector<Symbol> evaluate_types(const ComputationTree& tree,
                                          std::span<const Symbol> sources, Symbol q) {
  std::vector<Symbol> value(tree.num_types(), 0);
  std::vector<Symbol> args;
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    if (tree.is_source_type(t)) {
      value[t] = sources[t];
      continue;
    }
    args.clear();
    for (TypeId p : tree.pre(t)) args.push_back(value[p]);
    value[t] = apply_operator(tree.producer(t), args, q);
  }
  return value;
}

inline Symbol evaluate_tree(const ComputationTree& tree,
                            std::span<const Symbol> sources, Symbol q) {
  return evaluate_types(tree, sources, q).back();
}

}  // namespace netfun
