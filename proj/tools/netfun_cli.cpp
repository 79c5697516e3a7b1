#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "netfun/netfun.hpp"

using namespace netfun;

namespace {

int exit_code_for(ErrorCode code) {
  switch (code) {
    case ErrorCode::kParse:
    case ErrorCode::kIo:
    case ErrorCode::kDisconnected:
    case ErrorCode::kDuplicateEdge:
    case ErrorCode::kNegativeCapacity:
    case ErrorCode::kBadSourceTerminal:
    case ErrorCode::kSelfLoop:
    case ErrorCode::kUnknownNode:
    case ErrorCode::kBadDegree:
    case ErrorCode::kNotTopological:
    case ErrorCode::kNotATree:
    case ErrorCode::kUnknownEdge:
    case ErrorCode::kBadOperator:
    case ErrorCode::kInvalidEmbedding:
    case ErrorCode::kDimensionMismatch:
    case ErrorCode::kNonpositiveWeight:
    case ErrorCode::kSharedSources:
    case ErrorCode::kAllWeightsZero:
      return 2;
    case ErrorCode::kCapacityExceeded:
    case ErrorCode::kQueueUnderflow:
    case ErrorCode::kVerificationFailed:
      return 4;
    default:
      return 3;
  }
}

std::string path_text(const Network& net, const ComputationTree& tree, const Embedding& b) {
  std::string out;
  for (TypeId t = 0; t < static_cast<TypeId>(b.paths.size()); ++t) {
    if (t) out += ' ';
    out += tree.edge(t).name + "=";
    for (std::size_t j = 0; j < b.paths[t].size(); ++j) {
      if (j) out += '>';
      out += net.name(b.paths[t][j]);
    }
  }
  return out;
}

std::vector<const ComputationTree*> tree_pointers(const Instance& inst) {
  std::vector<const ComputationTree*> out;
  if (inst.multi) {
    for (const auto& d : inst.multi->terminals) out.push_back(&d.tree);
  } else {
    for (const auto& t : inst.trees) out.push_back(&t);
  }
  return out;
}

void print_flows(std::ostream& os, const Network& net,
                 const std::vector<const ComputationTree*>& trees, const EmbeddingFlows& flows) {
  os << "embeddings: " << flows.x.size() << "\n";
  for (const auto& [b, x] : flows.x) {
    os << "  " << to_string(x);
    if (trees.size() > 1) os << " tree " << b.tree;
    os << "  " << path_text(net, *trees.at(b.tree), b) << "\n";
  }
}

std::string decimal(const Rational& r) {
  std::ostringstream os;
  os.precision(9);
  os << to_double(r);
  return os.str();
}

struct SolveArgs {
  std::string instance;
  std::string method = "exact";
  double epsilon = 0.1;
  std::size_t enumerate_cap = 200000;
  std::string output;
  std::string trace;
};

int cmd_solve(const SolveArgs& a) {
  Instance inst = load_instance(a.instance);
  const Network& net = inst.net;
  const auto trees = tree_pointers(inst);
  ApproxParams params;
  params.epsilon = a.epsilon;
  params.record_trace = !a.trace.empty();
  Json report;
  EmbeddingFlows flows;
  std::vector<TraceRecord> trace;
  std::cout << "method: " << a.method << "\n";

  if (a.method == "node-arc") {
    if (inst.multi || inst.energy || inst.trees.size() != 1) {
      throw Error(ErrorCode::kUnsupported,
                  "node-arc supports single-tree instances with optional precision");
    }
    std::span<const Rational> w;
    if (inst.precision) w = *inst.precision;
    NodeArcSolution sol = solve_node_arc(net, inst.trees[0], w);
    if (auto v = verify_node_arc(net, inst.trees[0], sol, w); !v.empty()) {
      throw Error(ErrorCode::kNumericFailure, describe_violations(v));
    }
    std::cout << "lambda: " << to_string(sol.lambda) << "\n";
    if (!a.output.empty()) write_json_file(a.output, node_arc_to_json(net, inst.trees[0], sol));
    return 0;
  }
  if (a.method != "exact" && a.method != "approx") {
    throw Error(ErrorCode::kParse, "--method must be exact, node-arc or approx");
  }
  const bool exact = a.method == "exact";

  if (inst.multi) {
    const bool concurrent = inst.multi->mode == MultiTerminalMode::kConcurrent;
    MultiTerminalSolution sol =
        exact ? (concurrent ? concurrent_exact(net, *inst.multi, a.enumerate_cap)
                            : weighted_sum_exact(net, *inst.multi, a.enumerate_cap))
              : (concurrent ? concurrent_approx(net, *inst.multi, params)
                            : weighted_sum_approx(net, *inst.multi, params));
    std::cout << "mode: " << (concurrent ? "concurrent" : "weighted-sum") << "\n";
    std::cout << "lambda: " << (exact ? to_string(sol.value) : decimal(sol.value)) << "\n";
    for (std::size_t i = 0; i < sol.per_terminal.size(); ++i) {
      std::cout << "terminal " << net.name(inst.multi->terminals[i].terminal) << ": "
                << (exact ? to_string(sol.per_terminal[i]) : decimal(sol.per_terminal[i]))
                << "\n";
    }
    if (!exact) {
      std::cout << "dual_bound: " << decimal(sol.dual_bound) << "\n";
      std::cout << "iterations: " << sol.iterations << "\n";
      report["dual_bound"] = to_string(sol.dual_bound);
      report["iterations"] = sol.iterations;
    }
    flows = std::move(sol.flows);
    trace = std::move(sol.trace);
    report["rate"] = to_string(sol.value);
  } else {
    Rational rate;
    if (exact) {
      if (inst.energy) {
        ExactSolution sol = energy_exact(net, inst.trees[0], *inst.energy, a.enumerate_cap);
        flows = std::move(sol.flows);
        rate = sol.rate;
      } else if (inst.trees.size() > 1) {
        ExactSolution sol = multi_tree_exact(net, inst.trees, a.enumerate_cap);
        flows = std::move(sol.flows);
        rate = sol.rate;
      } else {
        std::span<const Rational> w;
        if (inst.precision) w = *inst.precision;
        EmbeddingEdgeResult sol = solve_embedding_edge_exact(net, inst.trees[0], a.enumerate_cap, w);
        flows = std::move(sol.flows);
        rate = sol.lambda;
      }
      std::cout << "lambda: " << to_string(rate) << "\n";
    } else {
      ApproxSolution sol;
      if (inst.energy) {
        sol = energy_approx(net, inst.trees[0], *inst.energy, params);
      } else if (inst.trees.size() > 1) {
        sol = multi_tree_approx(net, inst.trees, params);
      } else if (inst.precision) {
        sol = precision_approx(net, inst.trees[0], *inst.precision, params);
      } else {
        sol = approx_max_rate(net, inst.trees[0], params);
      }
      flows = std::move(sol.flows);
      rate = sol.rate;
      trace = std::move(sol.trace);
      std::cout << "lambda: " << decimal(rate) << "\n";
      std::cout << "dual_bound: " << decimal(sol.dual_bound) << "\n";
      std::cout << "iterations: " << sol.iterations << " of at most " << sol.iteration_bound
                << "\n";
      report["dual_bound"] = to_string(sol.dual_bound);
      report["iterations"] = sol.iterations;
      report["iteration_bound"] = sol.iteration_bound;
    }
    report["rate"] = to_string(rate);
  }
  print_flows(std::cout, net, trees, flows);
  if (!a.output.empty()) {
    Json doc = flows_to_json(net, trees, flows);
    doc["method"] = a.method;
    for (auto& [k, v] : report.items()) doc[k] = v;
    write_json_file(a.output, doc);
  }
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + a.trace);
    write_trace(out, trace);
  }
  return 0;
}

int cmd_decompose(const std::string& instance, const std::string& solution,
                  const std::string& output) {
  Instance inst = load_instance(instance);
  if (inst.multi || inst.energy || inst.trees.size() != 1) {
    throw Error(ErrorCode::kUnsupported, "decompose needs a single-tree instance");
  }
  const ComputationTree& tree = inst.trees[0];
  NodeArcSolution sol = node_arc_from_json(inst.net, tree, read_json_file(solution));
  DecomposeOptions opt;
  if (inst.precision) opt.type_weights = *inst.precision;
  EmbeddingFlows flows = decompose(inst.net, tree, sol, opt);
  std::cout << "lambda: " << to_string(flows.total()) << "\n";
  print_flows(std::cout, inst.net, {&tree}, flows);
  if (!output.empty()) {
    Json doc = flows_to_json(inst.net, {&tree}, flows);
    doc["method"] = "decompose";
    write_json_file(output, doc);
  }
  return 0;
}

struct SimulateArgs {
  std::string instance;
  std::string flows;
  std::int64_t frames = 10;
  std::uint64_t seed = 1;
  std::string rounding_eps;
  std::string trace;
  std::string outputs;
};

int cmd_simulate(const SimulateArgs& a) {
  Instance inst = load_instance(a.instance);
  if (inst.multi || inst.energy || inst.precision) {
    throw Error(ErrorCode::kUnsupported, "simulate supports capacity instances with one terminal");
  }
  const Network& net = inst.net;
  const auto trees = tree_pointers(inst);
  EmbeddingFlows flows = flows_from_json(net, trees, read_json_file(a.flows));
  Rational eps = a.rounding_eps.empty() ? Rational(0) : parse_rational(a.rounding_eps);
  if (a.rounding_eps.empty()) {
    eps = flows.total() / 1000;
    if (sgn(eps) == 0) eps = Rational(1, 1000);
  }
  Schedule s = make_schedule(net, inst.trees, round_flows(flows, eps));
  std::cout << "N: " << s.flows.frame << "\n";
  std::cout << "n:";
  for (auto v : s.flows.n) std::cout << " " << v;
  std::cout << "\n";
  std::cout << "rate: " << to_string(s.flows.rate) << "\n";
  if (auto v = verify_schedule(net, s); !v.empty()) {
    const Edge& e = net.edge(v[0].edge);
    throw Error(ErrorCode::kCapacityExceeded,
                "link " + net.name(e.u) + "-" + net.name(e.v) + " needs " +
                    std::to_string(v[0].symbols) + " symbols per frame, limit " +
                    to_string(v[0].limit));
  }
  int kappa = inst.trees[0].kappa();
  auto streams = random_streams(kappa, a.frames * s.flows.symbols_per_frame(), inst.q, a.seed);
  SimulationOptions opt;
  opt.record_trace = !a.trace.empty();
  SimulationResult res = simulate(net, inst.trees, s, a.frames, streams, inst.q, opt);
  auto bad = mismatches(inst.trees[0], res, streams, inst.q);
  std::cout << "frames: " << a.frames << "\n";
  std::cout << "delivered: " << res.delivered_count << "\n";
  if (!a.trace.empty()) {
    std::ofstream out(a.trace);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + a.trace);
    write_trace(out, net, res.trace);
  }
  if (!a.outputs.empty()) {
    std::ofstream out(a.outputs);
    if (!out) throw Error(ErrorCode::kIo, "cannot write " + a.outputs);
    for (Symbol v : res.outputs) out << v << "\n";
  }
  if (!bad.empty()) {
    std::cout << "FAIL\n";
    throw Error(ErrorCode::kVerificationFailed,
                std::to_string(bad.size()) + " terminal values differ, first at index " +
                    std::to_string(bad.front()));
  }
  std::cout << "PASS\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Maximum-rate function computation over capacitated networks"};
  app.require_subcommand(1);

  SolveArgs solve;
  auto* s = app.add_subcommand("solve", "Compute the maximum rate of an instance");
  s->add_option("instance", solve.instance, "Instance file")->required();
  s->add_option("--method", solve.method, "exact, node-arc or approx")
      ->check(CLI::IsMember({"exact", "node-arc", "approx"}));
  s->add_option("--epsilon", solve.epsilon, "Accuracy of the approximate solver");
  s->add_option("--enumerate-cap", solve.enumerate_cap, "Embedding enumeration limit");
  s->add_option("--output", solve.output, "Write the JSON report here");
  s->add_option("--trace", solve.trace, "Write per-iteration records here");

  std::string dec_instance, dec_solution, dec_output;
  auto* d = app.add_subcommand("decompose", "Split a node-arc solution into embedding flows");
  d->add_option("instance", dec_instance, "Instance file")->required();
  d->add_option("solution", dec_solution, "Node-arc solution file")->required();
  d->add_option("--output", dec_output, "Write the embedding flows here");

  SimulateArgs sim;
  auto* m = app.add_subcommand("simulate", "Run the frame protocol on random source streams");
  m->add_option("instance", sim.instance, "Instance file")->required();
  m->add_option("flows", sim.flows, "Embedding flows file")->required();
  m->add_option("--frames", sim.frames, "Number of source frames K")->check(CLI::NonNegativeNumber);
  m->add_option("--seed", sim.seed, "Seed for the source streams");
  m->add_option("--rounding-eps", sim.rounding_eps, "Allowed rate loss when rounding flows");
  m->add_option("--trace", sim.trace, "Write per-subframe records here");
  m->add_option("--outputs", sim.outputs, "Write terminal values here, one per line");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }
  try {
    if (*s) return cmd_solve(solve);
    if (*d) return cmd_decompose(dec_instance, dec_solution, dec_output);
    if (*m) return cmd_simulate(sim);
  } catch (const Error& e) {
    std::cerr << "error:" << e.name() << ":" << e.what() << "\n";
    return exit_code_for(e.code());
  } catch (const std::exception& e) {
    std::cerr << "error:Internal:" << e.what() << "\n";
    return 3;
  }
  return 0;
}
