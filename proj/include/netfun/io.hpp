#pragma once

#include <fstream>
#include <initializer_list>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/extensions.hpp"
#include "netfun/lp.hpp"
#include "netfun/network.hpp"
#include "netfun/oracle.hpp"
#include "netfun/rational.hpp"
#include "netfun/tree.hpp"

namespace netfun {

using Json = nlohmann::json;

// A parsed instance document. Extensions are enabled by the presence of
// their fields.
struct Instance {
  Network net;
  Symbol q = 2;
  std::vector<ComputationTree> trees;
  std::optional<MultiTerminalInstance> multi;
  std::optional<std::vector<Rational>> precision;
  std::optional<EnergyModel> energy;
};

namespace io_detail {

[[noreturn]] inline void fail(const std::string& where, const std::string& msg) {
  throw Error(ErrorCode::kParse, where + ": " + msg);
}

inline void allow_only(const Json& obj, const std::string& where,
                       std::initializer_list<const char*> keys) {
  if (!obj.is_object()) fail(where, "expected an object");
  for (const auto& item : obj.items()) {
    bool known = false;
    for (const char* k : keys) known = known || item.key() == k;
    if (!known) fail(where + "." + item.key(), "unknown field");
  }
}

inline const Json& require(const Json& obj, const std::string& where, const char* key) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(where + "." + key, "missing field");
  return *it;
}

inline std::string name_of(const Json& j, const std::string& where) {
  if (j.is_string()) return j.get<std::string>();
  if (j.is_number_integer()) return std::to_string(j.get<long long>());
  fail(where, "expected a node name");
}

inline Rational rational_of(const Json& j, const std::string& where) {
  try {
    if (j.is_string()) return parse_rational(j.get<std::string>());
    if (j.is_number_integer()) return Rational(Integer(std::to_string(j.get<long long>())));
    if (j.is_number_float()) return rational_from_decimal_double(j.get<double>());
  } catch (const Error& e) {
    fail(where, e.what());
  }
  fail(where, "expected a number or a \"p/q\" string");
}

struct NodeIndex {
  std::map<std::string, NodeId> ids;
  NodeId at(const Json& j, const std::string& where) const {
    std::string name = name_of(j, where);
    auto it = ids.find(name);
    if (it == ids.end()) {
      throw Error(ErrorCode::kUnknownNode, where + ": unknown node \"" + name + "\"");
    }
    return it->second;
  }
};

inline OpKind op_of(const std::string& s, const std::string& where) {
  for (OpKind k : {OpKind::kNone, OpKind::kAdd, OpKind::kMul, OpKind::kXor, OpKind::kMin,
                   OpKind::kMax, OpKind::kLookup}) {
    if (op_name(k) == s) return k;
  }
  fail(where, "unknown operator \"" + s + "\"");
}

struct ParsedTree {
  ComputationTree tree;
  // Physical source node per source type, when a source_map is present.
  std::optional<std::vector<NodeId>> sources;
};

inline ParsedTree parse_tree(const Json& j, const std::string& where, const NodeIndex& nodes) {
  allow_only(j, where, {"nodes", "edges", "source_map"});
  const Json& jn = require(j, where, "nodes");
  const Json& je = require(j, where, "edges");
  if (!jn.is_array()) fail(where + ".nodes", "expected an array");
  if (!je.is_array()) fail(where + ".edges", "expected an array");
  std::vector<TreeNode> tn;
  std::map<std::string, int> node_ids;
  for (std::size_t i = 0; i < jn.size(); ++i) {
    const std::string w = where + ".nodes[" + std::to_string(i) + "]";
    allow_only(jn[i], w, {"id", "op", "table"});
    TreeNode node;
    node.name = name_of(require(jn[i], w, "id"), w + ".id");
    if (!node_ids.emplace(node.name, static_cast<int>(i)).second) fail(w + ".id", "duplicate id");
    OpKind kind = OpKind::kNone;
    if (auto it = jn[i].find("op"); it != jn[i].end()) {
      if (!it->is_string()) fail(w + ".op", "expected a string");
      kind = op_of(it->get<std::string>(), w + ".op");
    }
    if (auto it = jn[i].find("table"); it != jn[i].end()) {
      if (kind != OpKind::kLookup) fail(w + ".table", "only lookup nodes take a table");
      if (!it->is_array()) fail(w + ".table", "expected an array");
      std::vector<Symbol> table;
      for (const Json& v : *it) {
        if (!v.is_number_unsigned()) fail(w + ".table", "expected nonnegative integers");
        table.push_back(v.get<Symbol>());
      }
      node.op = Operator::lookup(std::move(table));
    } else {
      if (kind == OpKind::kLookup) fail(w + ".table", "lookup nodes need a table");
      node.op = Operator::of(kind);
    }
    tn.push_back(std::move(node));
  }
  std::vector<TreeEdge> te;
  std::set<std::string> edge_ids;
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string w = where + ".edges[" + std::to_string(i) + "]";
    allow_only(je[i], w, {"id", "tail", "head"});
    TreeEdge edge;
    edge.name = name_of(require(je[i], w, "id"), w + ".id");
    if (!edge_ids.insert(edge.name).second) fail(w + ".id", "duplicate id");
    for (auto [key, slot] : {std::pair{"tail", &edge.tail}, std::pair{"head", &edge.head}}) {
      std::string ref = name_of(require(je[i], w, key), w + "." + key);
      auto it = node_ids.find(ref);
      if (it == node_ids.end()) fail(w + "." + key, "unknown tree node \"" + ref + "\"");
      *slot = it->second;
    }
    te.push_back(std::move(edge));
  }
  ParsedTree out{ComputationTree(std::move(tn), std::move(te)), std::nullopt};
  validate_tree(out.tree).throw_if_error();
  if (auto it = j.find("source_map"); it != j.end()) {
    const std::string w = where + ".source_map";
    if (!it->is_object()) fail(w, "expected an object");
    std::vector<NodeId> src(out.tree.kappa(), -1);
    for (const auto& item : it->items()) {
      auto t = out.tree.find_type(item.key());
      if (!t || !out.tree.is_source_type(*t)) {
        fail(w + "." + item.key(), "not a source edge of the tree");
      }
      src[*t] = nodes.at(item.value(), w + "." + item.key());
    }
    for (int l = 0; l < out.tree.kappa(); ++l) {
      if (src[l] < 0) fail(w, "no source for " + out.tree.edge(l).name);
    }
    out.sources = std::move(src);
  }
  return out;
}

}  // namespace io_detail

inline Instance parse_instance(const Json& doc) {
  using namespace io_detail;
  const std::string root = "instance";
  if (!doc.is_object()) fail(root, "expected an object");
  for (const auto& item : doc.items()) {
    static const std::set<std::string> keys{
        "nodes",      "edges",     "sources", "terminal", "alphabet_q", "tree",
        "trees",      "terminals", "weights", "mode",     "precision",  "energy",
        "colocated_cap"};
    if (!keys.count(item.key())) fail(item.key(), "unknown field");
  }
  const bool has_energy = doc.contains("energy");

  // Nodes and edges.
  const Json& jn = require(doc, root, "nodes");
  if (!jn.is_array() || jn.empty()) fail("nodes", "expected a non-empty array");
  NodeIndex index;
  std::vector<std::string> names;
  for (std::size_t i = 0; i < jn.size(); ++i) {
    std::string name = name_of(jn[i], "nodes[" + std::to_string(i) + "]");
    if (!index.ids.emplace(name, static_cast<NodeId>(i)).second) {
      fail("nodes[" + std::to_string(i) + "]", "duplicate node \"" + name + "\"");
    }
    names.push_back(std::move(name));
  }
  const Json& je = require(doc, root, "edges");
  if (!je.is_array()) fail("edges", "expected an array");
  std::vector<Edge> edges;
  for (std::size_t i = 0; i < je.size(); ++i) {
    const std::string w = "edges[" + std::to_string(i) + "]";
    allow_only(je[i], w, {"u", "v", "cap", "directed"});
    Edge e;
    e.u = index.at(require(je[i], w, "u"), w + ".u");
    e.v = index.at(require(je[i], w, "v"), w + ".v");
    if (auto it = je[i].find("cap"); it != je[i].end()) {
      e.cap = rational_of(*it, w + ".cap");
    } else if (has_energy) {
      e.cap = 0;
    } else {
      fail(w + ".cap", "missing field");
    }
    if (auto it = je[i].find("directed"); it != je[i].end()) {
      if (!it->is_boolean()) fail(w + ".directed", "expected a boolean");
      e.directed = it->get<bool>();
    }
    edges.push_back(std::move(e));
  }

  Instance inst;
  if (auto it = doc.find("alphabet_q"); it != doc.end()) {
    if (!it->is_number_unsigned() || it->get<std::uint64_t>() < 2 ||
        it->get<std::uint64_t>() > (1u << 20)) {
      fail("alphabet_q", "expected an integer in [2, 2^20]");
    }
    inst.q = it->get<Symbol>();
  }
  Rational colocated = default_colocated_capacity();
  if (auto it = doc.find("colocated_cap"); it != doc.end()) {
    colocated = rational_of(*it, "colocated_cap");
  }

  // Multi-terminal documents describe sources and trees per terminal.
  if (auto it = doc.find("terminals"); it != doc.end()) {
    for (const char* k : {"tree", "trees", "precision", "energy"}) {
      if (doc.contains(k)) fail(k, "not allowed together with \"terminals\"");
    }
    if (!it->is_array() || it->empty()) fail("terminals", "expected a non-empty array");
    MultiTerminalInstance mt;
    for (std::size_t i = 0; i < it->size(); ++i) {
      const std::string w = "terminals[" + std::to_string(i) + "]";
      const Json& jt = (*it)[i];
      allow_only(jt, w, {"terminal", "sources", "tree"});
      TerminalDemand d;
      d.terminal = index.at(require(jt, w, "terminal"), w + ".terminal");
      ParsedTree pt = parse_tree(require(jt, w, "tree"), w + ".tree", index);
      if (auto s = jt.find("sources"); s != jt.end()) {
        if (!s->is_array()) fail(w + ".sources", "expected an array");
        for (std::size_t l = 0; l < s->size(); ++l) {
          d.sources.push_back(index.at((*s)[l], w + ".sources"));
        }
        if (pt.sources && *pt.sources != d.sources) {
          fail(w + ".sources", "disagrees with the tree's source_map");
        }
      } else if (pt.sources) {
        d.sources = *pt.sources;
      } else {
        fail(w + ".sources", "missing field");
      }
      d.tree = std::move(pt.tree);
      mt.terminals.push_back(std::move(d));
    }
    if (auto w = doc.find("weights"); w != doc.end()) {
      if (!w->is_array() || w->size() != mt.terminals.size()) {
        fail("weights", "expected one weight per terminal");
      }
      for (std::size_t i = 0; i < w->size(); ++i) {
        mt.terminals[i].alpha = rational_of((*w)[i], "weights[" + std::to_string(i) + "]");
      }
    }
    if (auto m = doc.find("mode"); m != doc.end()) {
      if (*m == "weighted-sum") {
        mt.mode = MultiTerminalMode::kWeightedSum;
      } else if (*m == "concurrent") {
        mt.mode = MultiTerminalMode::kConcurrent;
      } else {
        fail("mode", "expected \"weighted-sum\" or \"concurrent\"");
      }
    }
    NodeId terminal = mt.terminals[0].terminal;
    std::vector<NodeId> sources = mt.terminals[0].sources;
    if (auto t = doc.find("terminal"); t != doc.end()) terminal = index.at(*t, "terminal");
    if (auto s = doc.find("sources"); s != doc.end()) {
      sources.clear();
      for (const Json& v : *s) sources.push_back(index.at(v, "sources"));
    }
    inst.net = Network(static_cast<int>(names.size()), std::move(edges), sources, terminal, names);
    validate_network(inst.net).throw_if_error();
    validate_multi_terminal(inst.net, mt);
    for (const auto& d : mt.terminals) validate_operators(d.tree, inst.q).throw_if_error();
    inst.multi = std::move(mt);
    return inst;
  }
  for (const char* k : {"weights", "mode"}) {
    if (doc.contains(k)) fail(k, "only allowed together with \"terminals\"");
  }

  // Single terminal, one or several trees.
  if (doc.contains("tree") == doc.contains("trees")) {
    fail("tree", "exactly one of \"tree\" and \"trees\" is required");
  }
  std::vector<ParsedTree> parsed;
  if (auto t = doc.find("tree"); t != doc.end()) {
    parsed.push_back(parse_tree(*t, "tree", index));
  } else {
    const Json& list = doc["trees"];
    if (!list.is_array() || list.empty()) fail("trees", "expected a non-empty array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      parsed.push_back(parse_tree(list[i], "trees[" + std::to_string(i) + "]", index));
    }
  }
  const NodeId terminal = index.at(require(doc, root, "terminal"), "terminal");
  std::vector<NodeId> slots;
  if (auto s = doc.find("sources"); s != doc.end()) {
    if (!s->is_array()) fail("sources", "expected an array");
    for (const Json& v : *s) slots.push_back(index.at(v, "sources"));
  }
  for (std::size_t i = 0; i < parsed.size(); ++i) {
    if (parsed[i].sources) {
      if (slots.empty()) slots = *parsed[i].sources;
      if (*parsed[i].sources != slots) fail("sources", "trees disagree on the source nodes");
    }
  }
  if (slots.empty()) fail("sources", "missing field");
  for (const auto& pt : parsed) {
    if (pt.tree.kappa() != static_cast<int>(slots.size())) {
      throw Error(ErrorCode::kBadSourceTerminal,
                  "tree has " + std::to_string(pt.tree.kappa()) + " sources but " +
                      std::to_string(slots.size()) + " are listed");
    }
  }
  // A node feeding several source types gets split nodes for the extra ones.
  std::vector<NodeId> hosts = slots;
  Network net(static_cast<int>(names.size()), std::move(edges), slots, terminal, names);
  std::set<NodeId> seen;
  for (int l = 0; l < static_cast<int>(hosts.size()); ++l) {
    if (!net.in_range(hosts[l])) continue;
    if (seen.insert(hosts[l]).second) continue;
    net = attach_colocated_source(net, hosts[l], l, colocated).first;
  }
  validate_network(net).throw_if_error();
  inst.net = std::move(net);
  for (auto& pt : parsed) {
    validate_operators(pt.tree, inst.q).throw_if_error();
    inst.trees.push_back(std::move(pt.tree));
  }
  const ComputationTree& tree = inst.trees[0];

  if (auto p = doc.find("precision"); p != doc.end()) {
    if (inst.trees.size() != 1) fail("precision", "requires a single tree");
    if (!p->is_object()) fail("precision", "expected an object");
    std::vector<Rational> w(tree.num_types(), Rational(0));
    std::vector<char> given(tree.num_types(), 0);
    for (const auto& item : p->items()) {
      auto t = tree.find_type(item.key());
      if (!t) fail("precision." + item.key(), "unknown tree edge");
      w[*t] = rational_of(item.value(), "precision." + item.key());
      given[*t] = 1;
    }
    for (TypeId t = 0; t < tree.num_types(); ++t) {
      if (!given[t]) fail("precision", "no weight for " + tree.edge(t).name);
    }
    validate_precision(tree, w);
    inst.precision = std::move(w);
  }
  if (auto e = doc.find("energy"); e != doc.end()) {
    if (inst.trees.size() != 1) fail("energy", "requires a single tree");
    if (inst.precision) fail("energy", "cannot be combined with precision");
    allow_only(*e, "energy", {"budgets", "costs"});
    EnergyModel em;
    em.budget.assign(inst.net.num_nodes(), Rational(0));
    const int g = tree.num_types();
    em.compute.assign(g, Rational(0));
    em.transmit.assign(g, Rational(0));
    em.receive.assign(g, Rational(0));
    const Json& budgets = require(*e, "energy", "budgets");
    if (!budgets.is_object()) fail("energy.budgets", "expected an object");
    for (const auto& item : budgets.items()) {
      auto u = inst.net.find_node(item.key());
      if (!u) {
        throw Error(ErrorCode::kUnknownNode,
                    "energy.budgets: unknown node \"" + item.key() + "\"");
      }
      em.budget[*u] = rational_of(item.value(), "energy.budgets." + item.key());
    }
    if (auto c = e->find("costs"); c != e->end()) {
      if (!c->is_object()) fail("energy.costs", "expected an object");
      for (const auto& item : c->items()) {
        const std::string w = "energy.costs." + item.key();
        auto t = tree.find_type(item.key());
        if (!t) fail(w, "unknown tree edge");
        allow_only(item.value(), w, {"c", "t", "r"});
        if (auto v = item.value().find("c"); v != item.value().end()) {
          em.compute[*t] = rational_of(*v, w + ".c");
        }
        if (auto v = item.value().find("t"); v != item.value().end()) {
          em.transmit[*t] = rational_of(*v, w + ".t");
        }
        if (auto v = item.value().find("r"); v != item.value().end()) {
          em.receive[*t] = rational_of(*v, w + ".r");
        }
      }
    }
    validate_energy(inst.net, tree, em);
    inst.energy = std::move(em);
  }
  return inst;
}

inline Json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIo, "cannot open " + path);
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::kParse, path + ": " + e.what());
  }
}

inline Instance load_instance(const std::string& path) {
  return parse_instance(read_json_file(path));
}

// ---------------------------------------------------------------------------
// Node-arc solutions: {"lambda", "flows":[{type,u,v,value}], "self_loops":[...]}.

inline Json node_arc_to_json(const Network& net, const ComputationTree& tree,
                             const NodeArcSolution& sol) {
  Json flows = Json::array();
  Json loops = Json::array();
  for (TypeId t = 0; t < tree.num_types(); ++t) {
    for (int a = 0; a < net.num_arc_slots(); ++a) {
      if (sgn(sol.arc_flow[t][a]) == 0) continue;
      const Edge& e = net.edge(a / 2);
      const NodeId from = a % 2 ? e.v : e.u;
      const NodeId to = a % 2 ? e.u : e.v;
      flows.push_back({{"type", tree.edge(t).name}, {"u", net.name(from)},
                       {"v", net.name(to)}, {"value", to_string(sol.arc_flow[t][a])}});
    }
    for (NodeId v = 0; v < net.num_nodes(); ++v) {
      if (sgn(sol.self_flow[t][v]) == 0) continue;
      loops.push_back({{"type", tree.edge(t).name}, {"node", net.name(v)},
                       {"value", to_string(sol.self_flow[t][v])}});
    }
  }
  return Json{{"lambda", to_string(sol.lambda)}, {"flows", flows}, {"self_loops", loops}};
}

inline NodeArcSolution node_arc_from_json(const Network& net, const ComputationTree& tree,
                                          const Json& doc) {
  using namespace io_detail;
  allow_only(doc, "solution", {"lambda", "flows", "self_loops"});
  NodeArcSolution sol = NodeArcSolution::zero(net, tree);
  sol.lambda = rational_of(require(doc, "solution", "lambda"), "lambda");
  NodeIndex index;
  for (NodeId v = 0; v < net.num_nodes(); ++v) index.ids[net.name(v)] = v;
  auto type_of = [&](const Json& j, const std::string& w) {
    auto t = tree.find_type(name_of(j, w));
    if (!t) throw Error(ErrorCode::kUnknownEdge, w + ": unknown tree edge");
    return *t;
  };
  const Json empty = Json::array();
  const Json& flows = doc.contains("flows") ? doc["flows"] : empty;
  if (!flows.is_array()) fail("flows", "expected an array");
  for (std::size_t i = 0; i < flows.size(); ++i) {
    const std::string w = "flows[" + std::to_string(i) + "]";
    allow_only(flows[i], w, {"type", "u", "v", "value"});
    const TypeId t = type_of(require(flows[i], w, "type"), w + ".type");
    const NodeId u = index.at(require(flows[i], w, "u"), w + ".u");
    const NodeId v = index.at(require(flows[i], w, "v"), w + ".v");
    auto arc = net.arc_between(u, v);
    if (!arc) {
      throw Error(ErrorCode::kInvalidEmbedding, w + ": no usable link " + net.name(u) + "->" +
                                                    net.name(v));
    }
    sol.arc_flow[t][arc->index] += rational_of(require(flows[i], w, "value"), w + ".value");
  }
  const Json& loops = doc.contains("self_loops") ? doc["self_loops"] : empty;
  if (!loops.is_array()) fail("self_loops", "expected an array");
  for (std::size_t i = 0; i < loops.size(); ++i) {
    const std::string w = "self_loops[" + std::to_string(i) + "]";
    allow_only(loops[i], w, {"type", "node", "value"});
    const TypeId t = type_of(require(loops[i], w, "type"), w + ".type");
    const NodeId v = index.at(require(loops[i], w, "node"), w + ".node");
    sol.self_flow[t][v] += rational_of(require(loops[i], w, "value"), w + ".value");
  }
  return sol;
}

// ---------------------------------------------------------------------------
// Embedding flows: {"lambda", "embeddings":[{"tree", "paths":{type:[nodes]},
// "value"}]} plus optional solver annotations.

inline Json flows_to_json(const Network& net, const std::vector<const ComputationTree*>& trees,
                          const EmbeddingFlows& flows) {
  Json list = Json::array();
  for (const auto& [b, x] : flows.x) {
    const ComputationTree& tree = *trees.at(b.tree);
    Json paths = Json::object();
    for (TypeId t = 0; t < static_cast<TypeId>(b.paths.size()); ++t) {
      Json p = Json::array();
      for (NodeId v : b.paths[t]) p.push_back(net.name(v));
      paths[tree.edge(t).name] = std::move(p);
    }
    list.push_back({{"tree", b.tree}, {"paths", std::move(paths)}, {"value", to_string(x)}});
  }
  return Json{{"lambda", to_string(flows.total())}, {"embeddings", std::move(list)}};
}

inline EmbeddingFlows flows_from_json(const Network& net,
                                      const std::vector<const ComputationTree*>& trees,
                                      const Json& doc) {
  using namespace io_detail;
  allow_only(doc, "flows", {"lambda", "embeddings", "method", "dual_bound", "iterations",
                            "iteration_bound", "rate"});
  NodeIndex index;
  for (NodeId v = 0; v < net.num_nodes(); ++v) index.ids[net.name(v)] = v;
  const Json& list = require(doc, "flows", "embeddings");
  if (!list.is_array()) fail("embeddings", "expected an array");
  EmbeddingFlows out;
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string w = "embeddings[" + std::to_string(i) + "]";
    allow_only(list[i], w, {"tree", "paths", "value"});
    Embedding b;
    if (auto t = list[i].find("tree"); t != list[i].end()) {
      if (!t->is_number_integer()) fail(w + ".tree", "expected an integer");
      b.tree = t->get<int>();
    }
    if (b.tree < 0 || b.tree >= static_cast<int>(trees.size())) fail(w + ".tree", "out of range");
    const ComputationTree& tree = *trees[b.tree];
    const Json& paths = require(list[i], w, "paths");
    if (!paths.is_object()) fail(w + ".paths", "expected an object");
    b.paths.assign(tree.num_types(), Path{});
    for (const auto& item : paths.items()) {
      auto t = tree.find_type(item.key());
      if (!t) fail(w + ".paths." + item.key(), "unknown tree edge");
      if (!item.value().is_array()) fail(w + ".paths." + item.key(), "expected an array");
      for (const Json& v : item.value()) {
        b.paths[*t].push_back(index.at(v, w + ".paths." + item.key()));
      }
    }
    validate_embedding(net, tree, b).throw_if_error();
    Rational x = rational_of(require(list[i], w, "value"), w + ".value");
    if (sgn(x) < 0) fail(w + ".value", "negative flow");
    out.x[b] += x;
  }
  return out;
}

inline void write_json_file(const std::string& path, const Json& doc) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::kIo, "cannot write " + path);
  out << doc.dump(2) << "\n";
}

}  // namespace netfun
