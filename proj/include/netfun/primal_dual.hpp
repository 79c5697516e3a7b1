#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "netfun/embedding.hpp"
#include "netfun/error.hpp"
#include "netfun/lp.hpp"
#include "netfun/network.hpp"
#include "netfun/oracle.hpp"
#include "netfun/rational.hpp"
#include "netfun/tree.hpp"

namespace netfun {

struct ApproxParams {
  // User-facing accuracy; the loop runs with epsilon / 3.
  double epsilon = 0.1;
  // 0 selects iteration_bound().
  std::int64_t iteration_cap = 0;
  bool record_trace = false;
};

inline double internal_epsilon(const ApproxParams& p) { return p.epsilon / 3.0; }

inline void check_params(const ApproxParams& p) {
  if (!(p.epsilon > 0.0 && p.epsilon < 1.0)) {
    throw Error(ErrorCode::kParse, "epsilon must lie in (0, 1)");
  }
}

// 10 * ceil(m' log_{1+e}(m') / e) with m' = max(m, 2) and e the internal
// accuracy.
inline std::int64_t iteration_bound(int num_resources, const ApproxParams& p) {
  check_params(p);
  const double e = internal_epsilon(p);
  const double m = std::max(num_resources, 2);
  return 10 * static_cast<std::int64_t>(std::ceil(m * std::log(m) / std::log1p(e) / e));
}

inline std::int64_t iteration_bound(const Network& net, const ApproxParams& p) {
  return iteration_bound(net.num_edges(), p);
}

// log(delta) for delta = (1+e) ((1+e) m)^(-1/e).
inline double log_delta(int num_resources, double e) {
  const double m = std::max(num_resources, 1);
  return std::log1p(e) - (std::log1p(e) + std::log(m)) / e;
}

struct TraceRecord {
  std::int64_t iteration = 0;
  double dual = 0;      // D(l) before the update
  double log_dual = 0;  // ln D(l), finite even when D underflows
  double weight = 0;    // weight of the chosen column under l, divided by its objective
  int bottleneck = -1;  // e*
  double bottleneck_factor = 0;
};

inline void write_trace(std::ostream& os, const std::vector<TraceRecord>& trace) {
  for (const auto& r : trace) {
    os << "{\"iteration\":" << r.iteration << ",\"D\":" << r.dual
       << ",\"log_D\":" << r.log_dual << ",\"weight\":" << r.weight
       << ",\"e_star\":" << r.bottleneck << "}\n";
  }
}

// One column offered by an oracle: its identity, its resource usage and its
// objective coefficient. `weight` is sum usage * length in the caller's
// (normalized) length units.
template <class Key>
struct PackingChoice {
  Key key;
  std::vector<std::pair<int, Rational>> usage;
  Rational objective = 1;
  double weight = 0;
};

template <class Key>
struct ApproxResult {
  std::map<Key, Rational> x;
  Rational objective;  // sum a_j x_j after scaling
  std::int64_t iterations = 0;
  std::int64_t iteration_bound = 0;
  // Final lengths up to the positive factor exp(log_scale).
  std::vector<double> lengths;
  double log_scale = 0;
  // Weak-duality certificate D(L)/alpha_L evaluated exactly on the final
  // lengths (read as exact binary rationals).
  Rational dual_bound;
  // Largest load / capacity after the normalizer, before exact down-scaling.
  Rational load_ratio;
  std::vector<TraceRecord> trace;

  double rate() const { return to_double(objective); }
};

// Garg-Konemann fractional packing: max sum a_j x_j subject to U x <= c.
// `choose(lengths, usable)` returns a column minimizing weight / objective
// and throws Unreachable when none exists; `exact_alpha(lengths)` returns
// that minimum in exact arithmetic. Resources with zero capacity are
// unusable.
template <class Key, class Choose, class ExactAlpha>
ApproxResult<Key> garg_konemann(const std::vector<Rational>& capacity, Choose&& choose,
                                ExactAlpha&& exact_alpha, const ApproxParams& params,
                                ErrorCode blocked_error = ErrorCode::kZeroCapacity) {
  check_params(params);
  const int m = static_cast<int>(capacity.size());
  const double eps = internal_epsilon(params);
  const double log_d = log_delta(m, eps);
  const std::int64_t cap =
      params.iteration_cap > 0 ? params.iteration_cap : iteration_bound(m, params);

  std::vector<char> usable(m, 1);
  std::vector<double> c(m, 0.0);
  bool any_blocked = false;
  for (int e = 0; e < m; ++e) {
    if (sgn(capacity[e]) < 0) throw Error(ErrorCode::kNegativeCapacity, "negative capacity");
    c[e] = to_double(capacity[e]);
    if (sgn(capacity[e]) == 0) {
      usable[e] = 0;
      any_blocked = true;
    }
  }
  // l(e) = exp(log_scale) * len[e], starting at delta / c(e).
  std::vector<double> len(m, 0.0);
  for (int e = 0; e < m; ++e) {
    if (usable[e]) len[e] = 1.0 / c[e];
  }
  double log_scale = log_d;
  auto log_dual = [&] {
    double sum = 0;
    for (int e = 0; e < m; ++e) {
      if (usable[e]) sum += c[e] * len[e];
    }
    return log_scale + std::log(sum);
  };
  auto call = [&]() -> PackingChoice<Key> {
    try {
      return choose(std::span<const double>(len), std::span<const char>(usable));
    } catch (const Error& err) {
      if (err.code() == ErrorCode::kUnreachable && any_blocked) {
        throw Error(blocked_error, "no column avoids the zero-capacity resources");
      }
      throw;
    }
  };

  ApproxResult<Key> res;
  res.iteration_bound = cap;
  std::map<Key, Rational> raw;
  struct Column {
    std::vector<std::pair<int, Rational>> usage;
    Rational objective;
  };
  std::map<Key, Column> columns;
  double ld = log_dual();
  while (ld < 0.0) {
    if (res.iterations >= cap) {
      throw Error(ErrorCode::kIterationCapExceeded,
                  "iteration cap " + std::to_string(cap) + " reached");
    }
    PackingChoice<Key> col = call();
    if (col.usage.empty()) {
      throw Error(ErrorCode::kUnbounded, "a column uses no resource");
    }
    // e* = argmin c(e) / r(e), exact, lowest index on ties.
    int star = -1;
    Rational best;
    for (const auto& [e, r] : col.usage) {
      if (sgn(r) <= 0) continue;
      Rational ratio = capacity[e] / r;
      if (star < 0 || ratio < best || (ratio == best && e < star)) {
        star = e;
        best = ratio;
      }
    }
    if (star < 0) throw Error(ErrorCode::kUnbounded, "a column uses no resource");
    raw[col.key] += best;
    if (!columns.count(col.key)) columns.emplace(col.key, Column{col.usage, col.objective});
    const double delta = to_double(best);
    double star_factor = 0;
    double peak = 0;
    for (const auto& [e, r] : col.usage) {
      const double factor = 1.0 + eps * delta * to_double(r) / c[e];
      len[e] *= factor;
      if (e == star) star_factor = factor;
    }
    for (int e = 0; e < m; ++e) peak = std::max(peak, len[e]);
    if (params.record_trace) {
      TraceRecord rec;
      rec.iteration = res.iterations;
      rec.log_dual = ld;
      rec.dual = std::exp(ld);
      rec.weight = std::exp(log_scale) * col.weight / to_double(col.objective);
      rec.bottleneck = star;
      rec.bottleneck_factor = star_factor;
      res.trace.push_back(rec);
    }
    if (peak > 1e150) {
      for (double& l : len) l /= peak;
      log_scale += std::log(peak);
    }
    ++res.iterations;
    ld = log_dual();
  }

  // x := x / log_{1+e}((1+e)/delta), then an exact down-scaling if any
  // resource is still over capacity.
  const double normalizer = (std::log1p(eps) - log_d) / std::log1p(eps);
  const Rational inv = Rational(1) / from_double(normalizer);
  std::vector<Rational> load(m, Rational(0));
  for (const auto& [key, v] : raw) {
    const Rational x = v * inv;
    res.x[key] = x;
    for (const auto& [e, r] : columns.at(key).usage) load[e] += r * x;
  }
  res.load_ratio = 0;
  for (int e = 0; e < m; ++e) {
    if (sgn(load[e]) == 0) continue;
    Rational ratio = load[e] / capacity[e];
    if (ratio > res.load_ratio) res.load_ratio = ratio;
  }
  if (res.load_ratio > 1) {
    for (auto& [key, x] : res.x) x /= res.load_ratio;
  }
  res.objective = 0;
  for (const auto& [key, x] : res.x) res.objective += columns.at(key).objective * x;
  res.lengths = len;
  res.log_scale = log_scale;

  // Exact weak-duality certificate: D(L) / alpha_L for the final lengths.
  std::vector<Rational> exact_len(m, Rational(0));
  for (int e = 0; e < m; ++e) {
    if (usable[e]) exact_len[e] = from_double(len[e]);
  }
  Rational d = 0;
  for (int e = 0; e < m; ++e) {
    if (usable[e]) d += capacity[e] * exact_len[e];
  }
  Rational alpha = exact_alpha(std::span<const Rational>(exact_len), std::span<const char>(usable));
  res.dual_bound = sgn(alpha) > 0 ? Rational(d / alpha) : Rational(0);
  return res;
}

struct ApproxSolution {
  EmbeddingFlows flows;
  Rational rate;
  Rational dual_bound;
  Rational load_ratio;
  std::int64_t iterations = 0;
  std::int64_t iteration_bound = 0;
  std::vector<double> lengths;
  double log_scale = 0;
  std::vector<TraceRecord> trace;
};

template <class Key>
void copy_run_info(ApproxSolution& out, ApproxResult<Key>& run) {
  out.rate = run.objective;
  out.dual_bound = run.dual_bound;
  out.load_ratio = run.load_ratio;
  out.iterations = run.iterations;
  out.iteration_bound = run.iteration_bound;
  out.lengths = std::move(run.lengths);
  out.log_scale = run.log_scale;
  out.trace = std::move(run.trace);
}

inline std::vector<std::pair<int, Rational>> sparse_usage(const std::vector<Rational>& dense) {
  std::vector<std::pair<int, Rational>> out;
  for (int e = 0; e < static_cast<int>(dense.size()); ++e) {
    if (sgn(dense[e]) != 0) out.emplace_back(e, dense[e]);
  }
  return out;
}

namespace detail {

// Oracle over one tree with optional per-type weights.
struct TreeOracle {
  const Network& net;
  const ComputationTree& tree;
  int tree_index = 0;
  std::vector<Rational> weights;  // empty means 1
  std::vector<double> weights_d;

  TreeOracle(const Network& n, const ComputationTree& t, int index,
             std::span<const Rational> w)
      : net(n), tree(t), tree_index(index), weights(w.begin(), w.end()) {
    for (const Rational& x : weights) weights_d.push_back(to_double(x));
  }

  OracleResult<double> best(std::span<const double> len, std::span<const char> usable,
                            PhaseCache<double>* cache = nullptr,
                            const std::vector<std::string>* keys = nullptr) const {
    OracleOptions<double> opt;
    opt.type_weights = std::span<const double>(weights_d);
    opt.usable_edges = usable;
    opt.cache = cache;
    opt.expression_keys = keys;
    OracleResult<double> r = optimal_embedding<double>(net, tree, len, opt);
    r.embedding.tree = tree_index;
    return r;
  }

  std::optional<Rational> best_exact(std::span<const Rational> len,
                                     std::span<const char> usable) const {
    OracleOptions<Rational> opt;
    opt.type_weights = std::span<const Rational>(weights);
    opt.usable_edges = usable;
    try {
      return optimal_embedding<Rational>(net, tree, len, opt).weight;
    } catch (const Error& e) {
      if (e.code() == ErrorCode::kUnreachable) return std::nullopt;
      throw;
    }
  }

  std::vector<Rational> usage(const Embedding& b) const {
    std::vector<Rational> w = weights;
    if (w.empty()) w.assign(tree.num_types(), Rational(1));
    return weighted_edge_usage<Rational>(net, tree, b, std::span<const Rational>(w));
  }
};

}  // namespace detail

// Approximate maximum rate: feasible embedding flows within (1 - epsilon)
// of the optimum, with a dual certificate.
inline ApproxSolution approx_max_rate(const Network& net, const ComputationTree& tree,
                                      const ApproxParams& params,
                                      std::span<const Rational> type_weights = {}) {
  validate_instance(net, tree).throw_if_error();
  detail::TreeOracle oracle(net, tree, 0, type_weights);
  auto choose = [&](std::span<const double> len, std::span<const char> usable) {
    OracleResult<double> r = oracle.best(len, usable);
    PackingChoice<Embedding> c;
    c.usage = sparse_usage(oracle.usage(r.embedding));
    c.key = std::move(r.embedding);
    c.weight = r.weight;
    return c;
  };
  auto alpha = [&](std::span<const Rational> len, std::span<const char> usable) {
    return oracle.best_exact(len, usable).value_or(Rational(0));
  };
  ApproxResult<Embedding> run =
      garg_konemann<Embedding>(net.capacities(), choose, alpha, params);
  ApproxSolution out;
  out.flows.x = std::move(run.x);
  copy_run_info(out, run);
  return out;
}

}  // namespace netfun
