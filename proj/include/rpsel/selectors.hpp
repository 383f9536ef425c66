// selectors.hpp - rendezvous point selection algorithms.
//
// All selectors score candidates through RpEvaluator and return a
// SelectionResult. The metaheuristics (tabu, vns) log a trace of their
// best-so-far fitness, which is non-increasing by construction since moves
// are only accepted when strictly better.

#pragma once

#include <cstdint>
#include <deque>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rpsel/metrics.hpp"
#include "rpsel/rng.hpp"

namespace rpsel {

// Hop-ball neighborhood: the set of nodes whose unweighted hop distance from
// s is in [1, j], ascending. Equivalent to iterating "direct neighbors of"
// j times and dropping s itself.
inline std::vector<NodeId> neighborhood(const Graph& g, NodeId s, std::uint32_t j) {
  g.check_node(s);
  std::vector<std::uint32_t> dist(g.node_count(), UINT32_MAX);
  std::deque<NodeId> queue;
  dist[s] = 0;
  queue.push_back(s);
  std::vector<NodeId> out;
  while (!queue.empty()) {
    NodeId u = queue.front();
    queue.pop_front();
    if (dist[u] >= j) continue;
    for (const auto& e : g.out_edges(u))
      if (dist[e.to] == UINT32_MAX) {
        dist[e.to] = dist[u] + 1;
        out.push_back(e.to);
        queue.push_back(e.to);
      }
  }
  std::sort(out.begin(), out.end());
  return out;
}

enum class LocalSearchKind { hill_climb, tabu };

struct InitialSolution {
  enum class Kind { bootstrap_hash, random, given } kind = Kind::bootstrap_hash;
  NodeId given = 0;

  static InitialSolution bootstrap() { return {}; }
  static InitialSolution random_pick() { return {Kind::random, 0}; }
  static InitialSolution at(NodeId v) { return {Kind::given, v}; }
};

struct VnsConfig {
  std::uint32_t k_max = 4;
  std::uint32_t max_total_iters = 0;     // 0 -> 100 * ceil(log2(node_count))
  std::uint32_t max_stable_iters = 10;   // outer passes without improvement
  LocalSearchKind local_search = LocalSearchKind::hill_climb;
  std::uint32_t local_search_iters = 0;  // 0 -> node_count
  std::uint32_t tabu_tenure = 7;
  std::uint64_t rng_seed = 0;
  InitialSolution initial{};
  CompareMode compare = CompareMode::penalized;
};

inline void validate_config(const VnsConfig& cfg) {
  if (cfg.k_max < 1) throw std::invalid_argument("k_max must be >= 1");
}

struct TraceEntry {
  std::uint32_t iteration = 0;
  std::uint32_t k = 0;  // neighborhood index of the move, 0 for bookkeeping rows
  NodeId incumbent = 0;
  double fitness = 0.0;
};

struct SelectionResult {
  NodeId rp = 0;
  // nullopt means hard infeasibility: no candidate can reach every member.
  std::optional<TreeEvaluation> eval;
  std::uint32_t iterations_used = 0;
  std::vector<TraceEntry> trace;
};

namespace detail {

inline std::uint32_t resolve_total_cap(const VnsConfig& cfg, NodeId n) {
  if (cfg.max_total_iters > 0) return cfg.max_total_iters;
  std::uint32_t bits = 0;
  for (NodeId x = 1; x < n; x <<= 1) ++bits;  // ceil(log2(n)), 0 for n == 1
  return std::max<std::uint32_t>(1, 100 * bits);
}

inline std::uint32_t resolve_ls_iters(const VnsConfig& cfg, NodeId n) {
  return cfg.local_search_iters > 0 ? cfg.local_search_iters : std::max<NodeId>(1, n);
}

inline NodeId resolve_initial(const RpEvaluator& ev, const VnsConfig& cfg, Rng& rng) {
  const auto& cand = ev.candidates();
  switch (cfg.initial.kind) {
    case InitialSolution::Kind::given:
      if (!ev.eligible(cfg.initial.given))
        throw std::invalid_argument("initial solution is not an eligible candidate");
      return cfg.initial.given;
    case InitialSolution::Kind::random:
      return cand[rng.uniform_index(cand.size())];
    case InitialSolution::Kind::bootstrap_hash:
    default: {
      // Deterministic seed-keyed pick: the candidate maximizing a keyed hash.
      NodeId best = cand.front();
      std::uint64_t best_h = mix_seed(cfg.rng_seed, best);
      for (std::size_t i = 1; i < cand.size(); ++i) {
        std::uint64_t h = mix_seed(cfg.rng_seed, cand[i]);
        if (h > best_h) {
          best_h = h;
          best = cand[i];
        }
      }
      return best;
    }
  }
}

// Best-improvement hill climb over the 1-hop neighborhood. Moves only on
// strict improvement, so the returned node is a certified 1-hop local
// optimum whenever it terminates before exhausting max_steps.
inline NodeId hill_climb(const RpEvaluator& ev, NodeId start, std::uint32_t max_steps,
                         CompareMode mode, std::uint32_t* steps_taken = nullptr) {
  NodeId current = start;
  auto current_eval = ev.evaluate(current);
  std::uint32_t taken = 0;
  for (std::uint32_t step = 0; step < max_steps; ++step) {
    NodeId best = current;
    auto best_eval = current_eval;
    for (NodeId v : neighborhood(ev.graph(), current, 1)) {
      if (!ev.eligible(v)) continue;
      auto cand = ev.evaluate(v);
      if (eval_better(cand, best_eval, mode)) {
        best = v;
        best_eval = cand;
      }
    }
    if (best == current) break;
    current = best;
    current_eval = best_eval;
    ++taken;
  }
  if (steps_taken) *steps_taken = taken;
  return current;
}

// Short tabu walk used as the alternative inner local search.
inline NodeId tabu_walk(const RpEvaluator& ev, NodeId start, std::uint32_t max_steps,
                        std::uint32_t tenure, CompareMode mode) {
  NodeId current = start;
  NodeId best = start;
  auto best_eval = ev.evaluate(best);
  std::deque<NodeId> tabu;
  auto is_tabu = [&](NodeId v) {
    for (NodeId t : tabu)
      if (t == v) return true;
    return false;
  };
  for (std::uint32_t step = 0; step < max_steps; ++step) {
    NodeId pick = current;
    std::optional<TreeEvaluation> pick_eval;
    bool found = false;
    for (NodeId v : neighborhood(ev.graph(), current, 1)) {
      if (!ev.eligible(v) || is_tabu(v)) continue;
      auto cand = ev.evaluate(v);
      if (!found || eval_better(cand, pick_eval, mode)) {
        pick = v;
        pick_eval = cand;
        found = true;
      }
    }
    if (!found) break;
    tabu.push_back(current);
    if (tenure > 0 && tabu.size() > tenure) tabu.pop_front();
    current = pick;
    if (eval_better(pick_eval, best_eval, mode)) {
      best = current;
      best_eval = pick_eval;
    }
  }
  return best;
}

inline NodeId local_search(const RpEvaluator& ev, NodeId start, const VnsConfig& cfg,
                           std::uint32_t steps) {
  if (cfg.local_search == LocalSearchKind::tabu)
    return tabu_walk(ev, start, steps, cfg.tabu_tenure, cfg.compare);
  return hill_climb(ev, start, steps, cfg.compare);
}

}  // namespace detail

// Uniform random pick over the candidate set.
inline SelectionResult select_random(const RpEvaluator& ev, std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x72616e64ull));
  const auto& cand = ev.candidates();
  NodeId rp = cand[rng.uniform_index(cand.size())];
  return SelectionResult{rp, ev.evaluate(rp), 1, {}};
}

namespace detail {

// Shared exhaustive-scan fallback: no candidate satisfies the delay bound, so
// return the minimum-max_delay reachable candidate (ties: cost, then id); if
// nothing is reachable at all, return the lowest-id candidate with no eval.
inline SelectionResult scan_fallback(const RpEvaluator& ev) {
  SelectionResult res;
  res.rp = ev.candidates().front();
  res.iterations_used = static_cast<std::uint32_t>(ev.candidates().size());
  bool found = false;
  double best_delay = kInfDelay, best_cost = kInfDelay;
  for (NodeId v : ev.candidates()) {
    auto e = ev.evaluate(v);
    if (!e) continue;
    bool take = false;
    if (!found) {
      take = true;
    } else if (e->max_delay != best_delay) {
      take = e->max_delay < best_delay;
    } else if (e->cost != best_cost) {
      take = e->cost < best_cost;
    }
    if (take) {
      found = true;
      res.rp = v;
      best_delay = e->max_delay;
      best_cost = e->cost;
      res.eval = e;
    }
  }
  return res;
}

}  // namespace detail

// Exhaustive scan minimizing delay variation among candidates that satisfy
// the delay bound; ties broken by lower tree cost, then by lower node id.
// Comparisons are exact: the returned variation is the true minimum, not a
// near-tie neighbor of it.
inline SelectionResult select_ddvca(const RpEvaluator& ev) {
  SelectionResult res;
  res.iterations_used = static_cast<std::uint32_t>(ev.candidates().size());
  bool found = false;
  double best_var = kInfDelay, best_cost = kInfDelay;
  for (NodeId v : ev.candidates()) {
    auto e = ev.evaluate(v);
    if (!e || e->max_delay > ev.bounds().delay_bound) continue;
    bool take = false;
    if (!found) {
      take = true;
    } else if (e->delay_variation != best_var) {
      take = e->delay_variation < best_var;
    } else if (e->cost != best_cost) {
      take = e->cost < best_cost;
    }
    if (take) {
      found = true;
      res.rp = v;
      best_var = e->delay_variation;
      best_cost = e->cost;
      res.eval = e;
    }
  }
  if (!found) {
    auto fb = detail::scan_fallback(ev);
    fb.iterations_used = res.iterations_used;
    return fb;
  }
  return res;
}

// Variant that first collects every delay-feasible candidate attaining the
// minimum delay variation (within tolerance) and then picks the one with the
// smallest max_delay; ties broken by lower cost, then by lower node id.
inline SelectionResult select_akc(const RpEvaluator& ev) {
  SelectionResult res;
  res.iterations_used = static_cast<std::uint32_t>(ev.candidates().size());
  double min_var = kInfDelay;
  bool found = false;
  for (NodeId v : ev.candidates()) {
    auto e = ev.evaluate(v);
    if (!e || e->max_delay > ev.bounds().delay_bound) continue;
    found = true;
    min_var = std::min(min_var, e->delay_variation);
  }
  if (!found) {
    auto fb = detail::scan_fallback(ev);
    fb.iterations_used = res.iterations_used;
    return fb;
  }
  bool taken = false;
  double best_delay = kInfDelay, best_cost = kInfDelay;
  for (NodeId v : ev.candidates()) {
    auto e = ev.evaluate(v);
    if (!e || e->max_delay > ev.bounds().delay_bound) continue;
    if (!approx_equal(e->delay_variation, min_var) && e->delay_variation > min_var)
      continue;
    bool take = false;
    if (!taken) {
      take = true;
    } else if (!approx_equal(e->max_delay, best_delay)) {
      take = e->max_delay < best_delay;
    } else if (!approx_equal(e->cost, best_cost)) {
      take = e->cost < best_cost;
    }
    if (take) {
      taken = true;
      res.rp = v;
      best_delay = e->max_delay;
      best_cost = e->cost;
      res.eval = e;
    }
  }
  return res;
}

// Standalone tabu search over the 1-hop move neighborhood.
inline SelectionResult select_tabu(const RpEvaluator& ev, const VnsConfig& cfg) {
  validate_config(cfg);
  Rng rng(mix_seed(cfg.rng_seed, 0x74616275ull));
  NodeId current = detail::resolve_initial(ev, cfg, rng);
  NodeId best = current;
  auto best_eval = ev.evaluate(best);
  std::uint32_t total_cap = detail::resolve_total_cap(cfg, ev.graph().node_count());
  SelectionResult res;
  res.trace.push_back(TraceEntry{0, 0, best, ev.fitness(best)});
  std::deque<NodeId> tabu;
  auto is_tabu = [&](NodeId v) {
    for (NodeId t : tabu)
      if (t == v) return true;
    return false;
  };
  std::uint32_t total = 0, stable = 0;
  while (total < total_cap && stable < cfg.max_stable_iters) {
    ++total;
    NodeId pick = current;
    std::optional<TreeEvaluation> pick_eval;
    bool found = false;
    for (NodeId v : neighborhood(ev.graph(), current, 1)) {
      if (!ev.eligible(v) || is_tabu(v)) continue;
      auto cand = ev.evaluate(v);
      if (!found || eval_better(cand, pick_eval, cfg.compare)) {
        pick = v;
        pick_eval = cand;
        found = true;
      }
    }
    if (!found) break;  // every admissible move is tabu or absent
    tabu.push_back(current);
    if (cfg.tabu_tenure > 0 && tabu.size() > cfg.tabu_tenure) tabu.pop_front();
    current = pick;
    if (eval_better(pick_eval, best_eval, cfg.compare)) {
      best = current;
      best_eval = pick_eval;
      stable = 0;
    } else {
      ++stable;
    }
    res.trace.push_back(TraceEntry{total, 1, best, ev.fitness(best)});
  }
  res.rp = best;
  res.eval = best_eval;
  res.iterations_used = total;
  return res;
}

// Variable neighborhood search. Shake: uniform pick from the k-hop ball of
// the incumbent; descend with the configured local search; accept only strict
// improvements (then k resets to 1, otherwise k grows). An outer pass through
// k = 1..k_max without improvement counts toward max_stable_iters. The final
// incumbent gets a hill-climb polish so the returned RP is always a 1-hop
// local optimum, whichever inner search was used.
inline SelectionResult select_vns(const RpEvaluator& ev, const VnsConfig& cfg) {
  validate_config(cfg);
  Rng rng(mix_seed(cfg.rng_seed, 0x766e73ull));
  NodeId n = ev.graph().node_count();
  std::uint32_t total_cap = detail::resolve_total_cap(cfg, n);
  std::uint32_t ls_steps = detail::resolve_ls_iters(cfg, n);

  NodeId incumbent = detail::resolve_initial(ev, cfg, rng);
  incumbent = detail::local_search(ev, incumbent, cfg, ls_steps);
  auto incumbent_eval = ev.evaluate(incumbent);

  SelectionResult res;
  res.trace.push_back(TraceEntry{0, 0, incumbent, ev.fitness(incumbent)});

  std::uint32_t total = 0, stable = 0;
  while (total < total_cap && stable < cfg.max_stable_iters) {
    bool improved_this_pass = false;
    std::uint32_t k = 1;
    while (k <= cfg.k_max && total < total_cap) {
      ++total;
      std::vector<NodeId> ball = neighborhood(ev.graph(), incumbent, k);
      std::erase_if(ball, [&](NodeId v) { return !ev.eligible(v); });
      std::uint32_t k_used = k;
      if (ball.empty()) {
        ++k;
      } else {
        NodeId shaken = ball[rng.uniform_index(ball.size())];
        NodeId refined = detail::local_search(ev, shaken, cfg, ls_steps);
        auto refined_eval = ev.evaluate(refined);
        if (eval_better(refined_eval, incumbent_eval, cfg.compare)) {
          incumbent = refined;
          incumbent_eval = refined_eval;
          improved_this_pass = true;
          k = 1;
        } else {
          ++k;
        }
      }
      res.trace.push_back(TraceEntry{total, k_used, incumbent, ev.fitness(incumbent)});
    }
    stable = improved_this_pass ? 0 : stable + 1;
  }

  NodeId polished = detail::hill_climb(ev, incumbent, std::max<NodeId>(1, n),
                                       cfg.compare);
  if (polished != incumbent) {
    incumbent = polished;
    res.trace.push_back(TraceEntry{total, 0, incumbent, ev.fitness(incumbent)});
  }
  res.rp = incumbent;
  res.eval = ev.evaluate(incumbent);
  res.iterations_used = total;
  return res;
}

// Exposed for tests and direct use: best-improvement hill climb from a given
// start, at most max_steps accepted moves.
inline SelectionResult local_search_hill_climb(const RpEvaluator& ev, NodeId start,
                                               std::uint32_t max_steps,
                                               CompareMode mode = CompareMode::penalized) {
  if (!ev.eligible(start))
    throw std::invalid_argument("start node is not an eligible candidate");
  std::uint32_t taken = 0;
  NodeId rp = detail::hill_climb(ev, start, max_steps, mode, &taken);
  return SelectionResult{rp, ev.evaluate(rp), taken, {}};
}

// Exhaustive argmin over the candidate set (ties to the lower id); the
// reference answer the heuristics are judged against in tests.
inline SelectionResult select_exhaustive(const RpEvaluator& ev,
                                         CompareMode mode = CompareMode::penalized) {
  SelectionResult res;
  res.rp = ev.candidates().front();
  res.eval = ev.evaluate(res.rp);
  res.iterations_used = static_cast<std::uint32_t>(ev.candidates().size());
  for (NodeId v : ev.candidates()) {
    auto e = ev.evaluate(v);
    if (eval_better(e, res.eval, mode)) {
      res.rp = v;
      res.eval = e;
    }
  }
  return res;
}

enum class SelectorKind { random_pick, ddvca, akc_variant, tabu, vns };

inline const char* selector_name(SelectorKind k) {
  switch (k) {
    case SelectorKind::random_pick: return "random";
    case SelectorKind::ddvca: return "ddvca";
    case SelectorKind::akc_variant: return "akc-variant";
    case SelectorKind::tabu: return "tabu";
    case SelectorKind::vns: return "vns";
  }
  return "?";
}

inline std::optional<SelectorKind> selector_from_name(const std::string& name) {
  if (name == "random") return SelectorKind::random_pick;
  if (name == "ddvca") return SelectorKind::ddvca;
  if (name == "akc-variant" || name == "akc") return SelectorKind::akc_variant;
  if (name == "tabu") return SelectorKind::tabu;
  if (name == "vns") return SelectorKind::vns;
  return std::nullopt;
}

inline SelectionResult run_selector(SelectorKind kind, const RpEvaluator& ev,
                                    const VnsConfig& cfg) {
  switch (kind) {
    case SelectorKind::random_pick: return select_random(ev, cfg.rng_seed);
    case SelectorKind::ddvca: return select_ddvca(ev);
    case SelectorKind::akc_variant: return select_akc(ev);
    case SelectorKind::tabu: return select_tabu(ev, cfg);
    case SelectorKind::vns: return select_vns(ev, cfg);
  }
  throw std::logic_error("unknown selector");
}

// Convenience wrappers owning a one-shot evaluator.

inline SelectionResult select_random(const Graph& g, const MulticastGroup& grp,
                                     const QosBounds& bounds, std::uint64_t seed) {
  RpEvaluator ev(g, grp, bounds);
  return select_random(ev, seed);
}

inline SelectionResult select_ddvca(const Graph& g, const MulticastGroup& grp,
                                    const QosBounds& bounds) {
  RpEvaluator ev(g, grp, bounds);
  return select_ddvca(ev);
}

inline SelectionResult select_akc(const Graph& g, const MulticastGroup& grp,
                                  const QosBounds& bounds) {
  RpEvaluator ev(g, grp, bounds);
  return select_akc(ev);
}

inline SelectionResult select_tabu(const Graph& g, const MulticastGroup& grp,
                                   const QosBounds& bounds, const VnsConfig& cfg) {
  RpEvaluator ev(g, grp, bounds);
  return select_tabu(ev, cfg);
}

inline SelectionResult select_vns(const Graph& g, const MulticastGroup& grp,
                                  const QosBounds& bounds, const VnsConfig& cfg) {
  RpEvaluator ev(g, grp, bounds);
  return select_vns(ev, cfg);
}

}  // namespace rpsel
