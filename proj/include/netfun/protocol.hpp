#pragma once

#include <algorithm>
#include <cstdint>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/network.hpp"
#include "netfun/rational.hpp"
#include "netfun/tree.hpp"

namespace netfun {

// Largest p/q <= x with q <= max_den, by a batched Stern-Brocot descent.
inline Rational round_down(const Rational& x, const Integer& max_den) {
  const Integer whole = floor_of(x);
  const Rational frac = x - Rational(whole);
  if (sgn(frac) == 0) return x;
  Integer a = 0, b = 1;  // lower bound a/b
  Integer c = 1, d = 1;  // upper bound c/d (exclusive unless equal to frac)
  if (frac == Rational(c, d)) return x;
  while (b + d <= max_den) {
    const Rational mediant(Integer(a + c), Integer(b + d));
    if (mediant <= frac) {
      // Largest k with (a + k c)/(b + k d) <= frac.
      const Rational bound = (frac * Rational(b) - Rational(a)) / (Rational(c) - frac * Rational(d));
      Integer k = floor_of(bound);
      Integer room = (max_den - b) / d;
      if (k > room) k = room;
      a += k * c;
      b += k * d;
      if (Rational(a, b) == frac) break;
    } else {
      // Largest k with (c + k a)/(d + k b) > frac.
      const Rational lhs = Rational(c) - frac * Rational(d);
      const Rational step = frac * Rational(b) - Rational(a);
      Integer k;
      if (sgn(step) == 0) {
        k = (max_den - d) / b;
      } else {
        const Rational q = lhs / step;
        k = floor_of(q);
        if (Rational(k) == q) k -= 1;
      }
      Integer room = (max_den - d) / b;
      if (k > room) k = room;
      c += k * a;
      d += k * b;
    }
  }
  Rational lower(a, b);
  lower.canonicalize();
  return Rational(whole) + lower;
}

// Rounded flows over the retained embeddings in canonical order.
struct RoundedFlows {
  std::vector<Embedding> order;
  std::vector<Rational> x;
  std::vector<std::int64_t> n;  // N x(B)
  std::int64_t frame = 1;       // N
  Rational rate;                // r
  Rational loss;                // sum x - r

  std::int64_t symbols_per_frame() const {
    std::int64_t s = 0;
    for (auto v : n) s += v;
    return s;
  }
};

inline constexpr std::int64_t kMaxRoundingDenominator = 1 << 14;
inline constexpr std::int64_t kMaxFrameScale = 1000000;

// Rounds each x(B) down with a denominator cap that doubles until the total
// loss drops below eps.
inline RoundedFlows round_flows(const EmbeddingFlows& flows, const Rational& eps) {
  if (sgn(eps) <= 0) throw Error(ErrorCode::kEpsilonTooSmall, "rounding epsilon must be positive");
  for (const auto& [b, x] : flows.x) {
    if (sgn(x) < 0) throw Error(ErrorCode::kInfeasibleInput, "negative embedding flow");
  }
  const Rational total = flows.total();
  for (Integer cap = 1;; cap *= 2) {
    if (cap > kMaxRoundingDenominator) {
      throw Error(ErrorCode::kEpsilonTooSmall,
                  "rounding needs denominators above " + std::to_string(kMaxRoundingDenominator));
    }
    RoundedFlows out;
    out.rate = 0;
    for (const auto& [b, x] : flows.x) {
      Rational r = round_down(x, cap);
      if (sgn(r) == 0) continue;
      out.order.push_back(b);
      out.x.push_back(r);
      out.rate += r;
    }
    out.loss = total - out.rate;
    if (out.loss >= eps) continue;
    Integer frame = 1;
    for (const Rational& r : out.x) frame = lcm_of(frame, r.get_den());
    if (frame > kMaxFrameScale) {
      throw Error(ErrorCode::kEpsilonTooSmall,
                  "frame scale exceeds " + std::to_string(kMaxFrameScale));
    }
    out.frame = frame.get_si();
    for (const Rational& r : out.x) {
      Rational v = r * Rational(frame);
      out.n.push_back(v.get_num().get_si());
    }
    return out;
  }
}

// Frame offsets for one embedding. Link j of B(theta) carries the block of
// source frame k in frame k + link[theta][j]; `ready` is the first frame in
// which theta can leave its start node and `arrival` the first frame in
// which it is usable at its end node.
struct DelayTable {
  std::vector<std::vector<int>> link;
  std::vector<int> ready;
  std::vector<int> arrival;

  // d(uv, B, theta); nullopt when uv is not a link of B(theta).
  std::optional<int> at(const Embedding& b, TypeId t, NodeId u, NodeId v) const {
    const Path& p = b.paths.at(t);
    for (std::size_t j = 0; j + 1 < p.size(); ++j) {
      if (p[j] == u && p[j + 1] == v) return link[t][j];
    }
    return std::nullopt;
  }
};

inline DelayTable compute_delays(const Network& net, const ComputationTree& tree,
                                 const Embedding& b) {
  validate_embedding(net, tree, b).throw_if_error();
  const int g = tree.num_types();
  DelayTable d;
  d.link.resize(g);
  d.ready.assign(g, 0);
  d.arrival.assign(g, 0);
  for (TypeId t = 0; t < g; ++t) {
    int ready = 0;
    for (TypeId p : tree.pre(t)) ready = std::max(ready, d.arrival[p]);
    d.ready[t] = ready;
    const Path& path = b.paths[t];
    for (std::size_t j = 0; j + 1 < path.size(); ++j) {
      d.link[t].push_back(ready + static_cast<int>(j));
    }
    d.arrival[t] = d.link[t].empty() ? ready : d.link[t].back() + 1;
  }
  return d;
}

struct Schedule {
  RoundedFlows flows;
  std::vector<DelayTable> delays;  // parallel to flows.order
};

// Embedding::tree selects the tree from `trees`.
inline Schedule make_schedule(const Network& net, const std::vector<ComputationTree>& trees,
                              RoundedFlows flows) {
  Schedule s;
  for (const Embedding& b : flows.order) {
    if (b.tree < 0 || b.tree >= static_cast<int>(trees.size())) {
      throw Error(ErrorCode::kInvalidEmbedding, "embedding refers to an unknown tree");
    }
    s.delays.push_back(compute_delays(net, trees[b.tree], b));
  }
  s.flows = std::move(flows);
  return s;
}

inline Schedule make_schedule(const Network& net, const ComputationTree& tree,
                              RoundedFlows flows) {
  return make_schedule(net, std::vector<ComputationTree>{tree}, std::move(flows));
}

struct LinkLoad {
  EdgeId edge = 0;
  std::int64_t symbols = 0;
  Rational limit;  // N c(e)
};

// Steady-state admission check: per link, both directions together.
inline std::vector<LinkLoad> verify_schedule(const Network& net, const Schedule& s) {
  std::vector<std::int64_t> load(net.num_edges(), 0);
  for (std::size_t i = 0; i < s.flows.order.size(); ++i) {
    for (const Path& p : s.flows.order[i].paths) {
      for (std::size_t j = 0; j + 1 < p.size(); ++j) {
        auto arc = net.arc_between(p[j], p[j + 1]);
        if (!arc) throw Error(ErrorCode::kInvalidEmbedding, "schedule uses a missing link");
        load[arc->edge] += s.flows.n[i];
      }
    }
  }
  std::vector<LinkLoad> out;
  for (EdgeId e = 0; e < net.num_edges(); ++e) {
    Rational limit = net.edge(e).cap * Rational(s.flows.frame);
    if (Rational(load[e]) > limit) out.push_back({e, load[e], limit});
  }
  return out;
}

// One transmitted subframe.
struct TraceEvent {
  std::int64_t frame = 0;
  EdgeId edge = 0;
  NodeId from = 0;
  NodeId to = 0;
  int embedding = 0;  // position in the schedule order
  TypeId type = 0;
  std::int64_t source_frame = 0;
  std::int64_t count = 0;
};

inline void write_trace(std::ostream& os, const Network& net,
                        const std::vector<TraceEvent>& trace) {
  for (const auto& e : trace) {
    os << "{\"frame\":" << e.frame << ",\"link\":" << e.edge << ",\"direction\":\""
       << net.name(e.from) << "->" << net.name(e.to) << "\",\"embedding\":" << e.embedding
       << ",\"type\":" << e.type << ",\"source_frame\":" << e.source_frame
       << ",\"count\":" << e.count << "}\n";
  }
}

struct SimulationResult {
  // Terminal value for every source index, in stream order.
  std::vector<Symbol> outputs;
  std::vector<char> delivered;
  std::int64_t delivered_count = 0;
  // Frame in which each source frame was completed at the terminal.
  std::vector<std::int64_t> completion_frame;
  std::int64_t frames = 0;
  std::vector<std::vector<std::int64_t>> load;  // [frame][edge]
  std::vector<TraceEvent> trace;
};

struct SimulationOptions {
  bool record_trace = false;
};

namespace detail {

struct Block {
  std::int64_t k = 0;
  std::vector<Symbol> data;
};

}  // namespace detail

// Runs K source frames through the schedule. `streams[l]` holds the symbols
// of source l, at least K r N of them; frame k uses indices [k rN, (k+1) rN)
// and B_i takes its n(B_i) symbols after those of B_1..B_{i-1}.
inline SimulationResult simulate(const Network& net, const std::vector<ComputationTree>& trees,
                                 const Schedule& s, std::int64_t frames_k,
                                 const std::vector<std::vector<Symbol>>& streams, Symbol q,
                                 const SimulationOptions& options = {}) {
  const auto& order = s.flows.order;
  const std::size_t nb = order.size();
  const std::int64_t per_frame = s.flows.symbols_per_frame();
  if (frames_k < 0) throw Error(ErrorCode::kParse, "negative frame count");
  for (const auto& tree : trees) {
    if (static_cast<int>(streams.size()) < tree.kappa()) {
      throw Error(ErrorCode::kDimensionMismatch, "one stream per source is required");
    }
    validate_operators(tree, q).throw_if_error();
  }
  for (const auto& st : streams) {
    if (static_cast<std::int64_t>(st.size()) < frames_k * per_frame) {
      throw Error(ErrorCode::kDimensionMismatch, "stream shorter than K r N symbols");
    }
  }
  std::vector<std::int64_t> offset(nb, 0);
  for (std::size_t i = 1; i < nb; ++i) offset[i] = offset[i - 1] + s.flows.n[i - 1];

  SimulationResult res;
  res.outputs.assign(frames_k * per_frame, 0);
  res.delivered.assign(frames_k * per_frame, 0);
  res.completion_frame.assign(frames_k, -1);
  std::vector<std::int64_t> blocks_done(frames_k, 0);

  int horizon = 0;
  for (const auto& d : s.delays) {
    for (int a : d.arrival) horizon = std::max(horizon, a);
  }
  const std::int64_t total_frames = frames_k == 0 ? 0 : frames_k + horizon;

  // queue[(B, theta, node)] of blocks received there, oldest first.
  std::map<std::tuple<int, TypeId, NodeId>, std::deque<detail::Block>> queue;
  auto pop = [&](int bi, TypeId t, NodeId u, std::int64_t k) {
    auto& qu = queue[{bi, t, u}];
    if (qu.empty() || qu.front().k != k) {
      throw Error(ErrorCode::kQueueUnderflow,
                  "block " + std::to_string(k) + " of type " + std::to_string(t) +
                      " missing at " + net.name(u));
    }
    std::vector<Symbol> data = std::move(qu.front().data);
    qu.pop_front();
    return data;
  };
  // y^k_{B,theta} at the start node of B(theta).
  std::function<std::vector<Symbol>(int, TypeId, std::int64_t)> obtain_at_start =
      [&](int bi, TypeId t, std::int64_t k) -> std::vector<Symbol> {
    const ComputationTree& tree = trees[order[bi].tree];
    const std::int64_t n = s.flows.n[bi];
    if (tree.is_source_type(t)) {
      const std::int64_t base = k * per_frame + offset[bi];
      return std::vector<Symbol>(streams[t].begin() + base, streams[t].begin() + base + n);
    }
    const NodeId u = order[bi].start(t);
    std::vector<std::vector<Symbol>> args;
    for (TypeId p : tree.pre(t)) {
      if (order[bi].paths[p].size() > 1) {
        args.push_back(pop(bi, p, u, k));
      } else {
        args.push_back(obtain_at_start(bi, p, k));
      }
    }
    std::vector<Symbol> out(n);
    std::vector<Symbol> in(args.size());
    for (std::int64_t i = 0; i < n; ++i) {
      for (std::size_t a = 0; a < args.size(); ++a) in[a] = args[a][i];
      out[i] = apply_operator(tree.producer(t), in, q);
    }
    return out;
  };

  struct Pending {
    int bi;
    TypeId t;
    NodeId to;
    detail::Block block;
  };
  for (std::int64_t f = 0; f < total_frames; ++f) {
    std::vector<std::int64_t> load(net.num_edges(), 0);
    std::vector<Pending> pending;
    // Transmission phase: per link direction the order is (B, theta),
    // which is also the order of this loop.
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const Embedding& b = order[bi];
      const DelayTable& d = s.delays[bi];
      for (TypeId t = 0; t < static_cast<TypeId>(b.paths.size()); ++t) {
        const Path& p = b.paths[t];
        for (std::size_t j = 0; j + 1 < p.size(); ++j) {
          const std::int64_t k = f - d.link[t][j];
          if (k < 0 || k >= frames_k) continue;
          std::vector<Symbol> data =
              j == 0 ? obtain_at_start(static_cast<int>(bi), t, k)
                     : pop(static_cast<int>(bi), t, p[j], k);
          const Arc arc = *net.arc_between(p[j], p[j + 1]);
          load[arc.edge] += static_cast<std::int64_t>(data.size());
          if (options.record_trace) {
            res.trace.push_back({f, arc.edge, p[j], p[j + 1], static_cast<int>(bi), t, k,
                                 static_cast<std::int64_t>(data.size())});
          }
          pending.push_back({static_cast<int>(bi), t, p[j + 1], {k, std::move(data)}});
        }
      }
    }
    for (EdgeId e = 0; e < net.num_edges(); ++e) {
      if (Rational(load[e]) > net.edge(e).cap * Rational(s.flows.frame)) {
        throw Error(ErrorCode::kCapacityExceeded,
                    "frame " + std::to_string(f) + " link " + net.name(net.edge(e).u) + "-" +
                        net.name(net.edge(e).v) + " carries " + std::to_string(load[e]) +
                        " symbols");
      }
    }
    res.load.push_back(std::move(load));
    // Delivery at the end of the frame.
    for (auto& pd : pending) queue[{pd.bi, pd.t, pd.to}].push_back(std::move(pd.block));
    // Terminal outputs for blocks completed in this frame.
    for (std::size_t bi = 0; bi < nb; ++bi) {
      const Embedding& b = order[bi];
      const DelayTable& d = s.delays[bi];
      const TypeId last = static_cast<TypeId>(b.paths.size()) - 1;
      const std::int64_t k = f - std::max(d.arrival[last] - 1, 0);
      if (k < 0 || k >= frames_k) continue;
      std::vector<Symbol> data = b.paths[last].size() > 1
                                     ? pop(static_cast<int>(bi), last, net.terminal(), k)
                                     : obtain_at_start(static_cast<int>(bi), last, k);
      const std::int64_t base = k * per_frame + offset[bi];
      for (std::size_t i = 0; i < data.size(); ++i) {
        res.outputs[base + i] = data[i];
        res.delivered[base + i] = 1;
        ++res.delivered_count;
      }
      if (++blocks_done[k] == static_cast<std::int64_t>(nb)) res.completion_frame[k] = f;
    }
  }
  res.frames = total_frames;
  return res;
}

inline SimulationResult simulate(const Network& net, const ComputationTree& tree,
                                 const Schedule& s, std::int64_t frames_k,
                                 const std::vector<std::vector<Symbol>>& streams, Symbol q,
                                 const SimulationOptions& options = {}) {
  return simulate(net, std::vector<ComputationTree>{tree}, s, frames_k, streams, q, options);
}

inline std::vector<std::vector<Symbol>> random_streams(int kappa, std::int64_t length,
                                                       Symbol q, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<Symbol> dist(0, q - 1);
  std::vector<std::vector<Symbol>> out(kappa, std::vector<Symbol>(length));
  for (auto& st : out) {
    for (Symbol& x : st) x = dist(rng);
  }
  return out;
}

// Indices whose delivered value differs from the function of the aligned
// source symbols (or that were never delivered).
inline std::vector<std::int64_t> mismatches(const ComputationTree& tree,
                                            const SimulationResult& res,
                                            const std::vector<std::vector<Symbol>>& streams,
                                            Symbol q) {
  std::vector<std::int64_t> bad;
  std::vector<Symbol> column(tree.kappa());
  for (std::int64_t i = 0; i < static_cast<std::int64_t>(res.outputs.size()); ++i) {
    for (int l = 0; l < tree.kappa(); ++l) column[l] = streams[l][i];
    if (!res.delivered[i] || res.outputs[i] != evaluate_tree(tree, column, q)) bad.push_back(i);
  }
  return bad;
}

}  // namespace netfun
