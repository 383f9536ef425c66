// metrics.hpp - shared-tree construction around a rendezvous point (RP) and
// the QoS evaluation used by every selector.
//
// For a candidate RP the shared tree is the union of delay-optimal paths:
// one path from each source to the RP and one from the RP to each receiver.
// End-to-end delay for a (source, receiver) pair is the source->RP delay plus
// the RP->receiver delay. Evaluation reports the extremes of those pair
// delays, their spread, and a scalar fitness that equals tree cost when both
// QoS bounds hold and otherwise adds a large penalty per unit of relative
// bound violation.

#pragma once

#include <algorithm>
#include <cstdint>
#include <optional>
#include <utility>
#include <variant>
#include <vector>

#include "rpsel/graph.hpp"

namespace rpsel {

// Ordered, duplicate-free member lists. Sources may also appear among the
// receivers; both lists must be non-empty for tree construction.
struct MulticastGroup {
  std::vector<NodeId> sources;
  std::vector<NodeId> receivers;
};

inline void validate_group(const MulticastGroup& grp, const Graph& g) {
  auto check = [&](const std::vector<NodeId>& v, const char* what) {
    if (v.empty()) throw std::invalid_argument(std::string(what) + " list is empty");
    for (std::size_t i = 0; i < v.size(); ++i) {
      g.check_node(v[i]);
      if (i > 0 && v[i] <= v[i - 1])
        throw std::invalid_argument(std::string(what) +
                                    " list must be strictly increasing");
    }
  };
  check(grp.sources, "sources");
  check(grp.receivers, "receivers");
}

// delay_bound and variation_bound are the two QoS ceilings; +infinity
// disables a bound. Finite values must be positive.
struct QosBounds {
  double delay_bound = kInfDelay;
  double variation_bound = kInfDelay;
};

inline void validate_bounds(const QosBounds& b) {
  if (!(b.delay_bound > 0.0) || !(b.variation_bound > 0.0))
    throw std::invalid_argument("QoS bounds must be positive (infinity allowed)");
}

struct FitnessWeights {
  double penalty = 1e6;
};

// Whether delay variation spans every (source, receiver) pair or only the
// receiver delays measured from a designated source (the first one).
enum class VariationScope { all_pairs, receivers_only };

struct MulticastTree {
  NodeId rp = 0;
  MulticastGroup group;
  std::vector<Path> source_paths;    // [i] runs group.sources[i] -> rp
  std::vector<Path> receiver_paths;  // [i] runs rp -> group.receivers[i]
  // Deduplicated directed edges of the receiver-side distribution tree
  // (union over receiver_paths), sorted ascending.
  std::vector<std::pair<NodeId, NodeId>> tree_edges;
};

struct TreeEvaluation {
  double cost = 0.0;
  double max_delay = 0.0;
  double min_delay = 0.0;
  double delay_variation = 0.0;
  bool feasible = false;
  double fitness = 0.0;
};

// Identifies the group member a candidate RP cannot serve.
struct UnreachableMember {
  NodeId node = 0;
  bool is_source = false;
};

// Builds the shared tree rooted at rp, or reports the first member (sources
// scanned first, then receivers, each in list order) with no connecting path.
inline std::variant<MulticastTree, UnreachableMember> build_shared_tree(
    const Graph& g, NodeId rp, const MulticastGroup& grp) {
  g.check_node(rp);
  validate_group(grp, g);
  MulticastTree tree;
  tree.rp = rp;
  tree.group = grp;
  tree.source_paths.reserve(grp.sources.size());
  for (NodeId s : grp.sources) {
    auto p = shortest_delay_path(g, s, rp);
    if (!p) return UnreachableMember{s, true};
    tree.source_paths.push_back(std::move(*p));
  }
  auto from_rp = shortest_delay_paths_from(g, rp);
  tree.receiver_paths.reserve(grp.receivers.size());
  for (NodeId d : grp.receivers) {
    if (!from_rp[d]) return UnreachableMember{d, false};
    tree.receiver_paths.push_back(std::move(*from_rp[d]));
  }
  for (const Path& p : tree.receiver_paths)
    for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i)
      tree.tree_edges.emplace_back(p.nodes[i], p.nodes[i + 1]);
  std::sort(tree.tree_edges.begin(), tree.tree_edges.end());
  tree.tree_edges.erase(std::unique(tree.tree_edges.begin(), tree.tree_edges.end()),
                        tree.tree_edges.end());
  return tree;
}

// Plain sum of member path costs; shared prefixes count once per path.
inline double tree_cost(const MulticastTree& t) {
  double sum = 0.0;
  for (const Path& p : t.source_paths) sum += p.total_cost;
  for (const Path& p : t.receiver_paths) sum += p.total_cost;
  return sum;
}

// Cost of the deduplicated receiver-side distribution tree.
inline double tree_edge_cost(const Graph& g, const MulticastTree& t) {
  double sum = 0.0;
  for (auto [u, v] : t.tree_edges) {
    const EdgeAttr* a = g.edge(u, v);
    if (a) sum += a->cost;
  }
  return sum;
}

struct PairDelay {
  NodeId source = 0;
  NodeId receiver = 0;
  double delay = 0.0;
};

// All (source, receiver) end-to-end delays through the RP, source-major in
// group list order.
inline std::vector<PairDelay> end_to_end_delays(const MulticastTree& t) {
  std::vector<PairDelay> out;
  out.reserve(t.source_paths.size() * t.receiver_paths.size());
  for (std::size_t si = 0; si < t.source_paths.size(); ++si)
    for (std::size_t di = 0; di < t.receiver_paths.size(); ++di)
      out.push_back(PairDelay{t.group.sources[si], t.group.receivers[di],
                              t.source_paths[si].total_delay +
                                  t.receiver_paths[di].total_delay});
  return out;
}

// Scores an already built tree against the bounds. Pure in its inputs.
inline TreeEvaluation evaluate_tree(const MulticastTree& t, const QosBounds& bounds,
                                    const FitnessWeights& weights = {},
                                    VariationScope scope = VariationScope::all_pairs) {
  validate_bounds(bounds);
  TreeEvaluation ev;
  ev.cost = tree_cost(t);
  double lo = kInfDelay, hi = -kInfDelay;
  if (scope == VariationScope::all_pairs) {
    for (const Path& sp : t.source_paths)
      for (const Path& rp : t.receiver_paths) {
        double d = sp.total_delay + rp.total_delay;
        lo = std::min(lo, d);
        hi = std::max(hi, d);
      }
  } else {
    // Spread of receiver delays seen from the designated (first) source;
    // max/min still report that source's end-to-end extremes.
    double base = t.source_paths.front().total_delay;
    for (const Path& rp : t.receiver_paths) {
      double d = base + rp.total_delay;
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
  }
  ev.max_delay = hi;
  ev.min_delay = lo;
  ev.delay_variation = hi - lo;
  ev.feasible = ev.max_delay <= bounds.delay_bound &&
                ev.delay_variation <= bounds.variation_bound;
  ev.fitness = ev.cost;
  if (!ev.feasible) {
    double excess_delay = std::max(0.0, ev.max_delay - bounds.delay_bound);
    double excess_var = std::max(0.0, ev.delay_variation - bounds.variation_bound);
    if (excess_delay > 0.0)
      ev.fitness += weights.penalty * excess_delay / bounds.delay_bound;
    if (excess_var > 0.0)
      ev.fitness += weights.penalty * excess_var / bounds.variation_bound;
  }
  return ev;
}

inline std::variant<TreeEvaluation, UnreachableMember> evaluate(
    const Graph& g, NodeId rp, const MulticastGroup& grp, const QosBounds& bounds,
    const FitnessWeights& weights = {},
    VariationScope scope = VariationScope::all_pairs) {
  auto built = build_shared_tree(g, rp, grp);
  if (auto* un = std::get_if<UnreachableMember>(&built)) return *un;
  return evaluate_tree(std::get<MulticastTree>(built), bounds, weights, scope);
}

// Relative equality used wherever selector logic must treat two candidate
// metrics as tied: |a-b| <= tol * max(|a|,|b|). Exact for a == b (covers 0==0
// and matching infinities).
inline bool approx_equal(double a, double b, double tol = 1e-9) {
  if (a == b) return true;
  double scale = std::max(std::abs(a), std::abs(b));
  return std::abs(a - b) <= tol * scale;
}

// How selectors rank candidates.
//   penalized:         lower fitness wins (the default everywhere).
//   feasibility_first: any feasible beats any infeasible; within a class,
//                      lower cost wins. Selects the same RP as `penalized`
//                      whenever a feasible candidate exists.
enum class CompareMode { penalized, feasibility_first };

// Strictly-better test; unreachable candidates (nullopt) rank worst.
inline bool eval_better(const std::optional<TreeEvaluation>& a,
                        const std::optional<TreeEvaluation>& b,
                        CompareMode mode = CompareMode::penalized) {
  if (!a) return false;
  if (!b) return true;
  if (mode == CompareMode::penalized) return a->fitness < b->fitness;
  if (a->feasible != b->feasible) return a->feasible;
  return a->cost < b->cost;
}

// Memoizing evaluator for one (graph, group, bounds) snapshot. Selectors
// revisit the same candidates constantly; the path computations for each RP
// are done once and reused. Not thread-safe: use one instance per worker.
class RpEvaluator {
 public:
  RpEvaluator(const Graph& g, MulticastGroup grp, QosBounds bounds = {},
              FitnessWeights weights = {},
              VariationScope scope = VariationScope::all_pairs,
              std::vector<NodeId> candidates = {})
      : graph_(&g),
        group_(std::move(grp)),
        bounds_(bounds),
        weights_(weights),
        scope_(scope),
        cache_(g.node_count()) {
    validate_group(group_, g);
    validate_bounds(bounds_);
    if (candidates.empty()) {
      candidates_.resize(g.node_count());
      for (NodeId v = 0; v < g.node_count(); ++v) candidates_[v] = v;
    } else {
      candidates_ = std::move(candidates);
      std::sort(candidates_.begin(), candidates_.end());
      candidates_.erase(std::unique(candidates_.begin(), candidates_.end()),
                        candidates_.end());
      for (NodeId v : candidates_) g.check_node(v);
      if (candidates_.empty())
        throw std::invalid_argument("candidate set is empty");
    }
    eligible_.assign(g.node_count(), 0);
    for (NodeId v : candidates_) eligible_[v] = 1;
  }

  const Graph& graph() const { return *graph_; }
  const MulticastGroup& group() const { return group_; }
  const QosBounds& bounds() const { return bounds_; }
  const FitnessWeights& weights() const { return weights_; }
  VariationScope scope() const { return scope_; }
  const std::vector<NodeId>& candidates() const { return candidates_; }
  bool eligible(NodeId v) const { return v < eligible_.size() && eligible_[v]; }

  // Replaces the bounds; cached trees and raw delay statistics survive.
  void set_bounds(QosBounds b) {
    validate_bounds(b);
    bounds_ = b;
  }

  // nullopt when rp cannot serve every member.
  std::optional<TreeEvaluation> evaluate(NodeId rp) const {
    const Entry& e = entry(rp);
    if (!e.tree) return std::nullopt;
    return evaluate_tree(*e.tree, bounds_, weights_, scope_);
  }

  double fitness(NodeId rp) const {
    auto ev = evaluate(rp);
    return ev ? ev->fitness : kInfDelay;
  }

  const MulticastTree* tree(NodeId rp) const {
    const Entry& e = entry(rp);
    return e.tree ? &*e.tree : nullptr;
  }

  std::optional<UnreachableMember> unreachable_reason(NodeId rp) const {
    return entry(rp).why;
  }

 private:
  struct Entry {
    bool computed = false;
    std::optional<MulticastTree> tree;
    std::optional<UnreachableMember> why;
  };

  const Entry& entry(NodeId rp) const {
    graph_->check_node(rp);
    Entry& e = cache_[rp];
    if (!e.computed) {
      auto built = build_shared_tree(*graph_, rp, group_);
      if (auto* un = std::get_if<UnreachableMember>(&built))
        e.why = *un;
      else
        e.tree = std::move(std::get<MulticastTree>(built));
      e.computed = true;
    }
    return e;
  }

  const Graph* graph_;
  MulticastGroup group_;
  QosBounds bounds_;
  FitnessWeights weights_;
  VariationScope scope_;
  std::vector<NodeId> candidates_;
  std::vector<char> eligible_;
  mutable std::vector<Entry> cache_;
};

// Default bound derivation: 1.5x the best achievable max_delay and delay
// variation over the candidate set (each minimum taken independently). A
// metric whose minimum is exactly zero gets an infinite bound - the only way
// that happens is when the metric is degenerate (e.g. a single
// source/receiver pair always has zero variation), where the constraint
// cannot discriminate anyway and a zero ceiling would be invalid.
inline QosBounds auto_bounds(const RpEvaluator& ev, double factor = 1.5) {
  double best_delay = kInfDelay, best_var = kInfDelay;
  for (NodeId v : ev.candidates()) {
    auto e = ev.evaluate(v);
    if (!e) continue;
    best_delay = std::min(best_delay, e->max_delay);
    best_var = std::min(best_var, e->delay_variation);
  }
  QosBounds b;
  b.delay_bound = best_delay > 0.0 ? factor * best_delay : kInfDelay;
  b.variation_bound = best_var > 0.0 ? factor * best_var : kInfDelay;
  return b;
}

inline QosBounds auto_bounds(const Graph& g, const MulticastGroup& grp,
                             double factor = 1.5) {
  RpEvaluator ev(g, grp);
  return auto_bounds(ev, factor);
}

}  // namespace rpsel
