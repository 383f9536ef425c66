// session.hpp - dynamic multicast session simulation.
//
// A session replays a time-sorted event trace (membership churn, mobility
// handovers, link/node failures and repairs, periodic timers) against a live
// copy of the topology. After every event the current RP's tree is
// re-derived from the live graph, a recovery policy decides whether to keep
// or reselect the RP, and disruption metrics are accumulated.
//
// Members carry a stable identity: the node where they first attached. A
// handover moves the attachment while the identity stays, so `handover 7 3 9`
// reads "member 7, currently attached at node 3, moves to node 9".

#pragma once

#include <algorithm>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "rpsel/selectors.hpp"

namespace rpsel {

enum class EventKind {
  join,
  leave,
  handover,
  link_fail,
  link_restore,
  node_fail,
  node_restore,
  periodic_timer,
};

inline const char* event_kind_name(EventKind k) {
  switch (k) {
    case EventKind::join: return "join";
    case EventKind::leave: return "leave";
    case EventKind::handover: return "handover";
    case EventKind::link_fail: return "link_fail";
    case EventKind::link_restore: return "link_restore";
    case EventKind::node_fail: return "node_fail";
    case EventKind::node_restore: return "node_restore";
    case EventKind::periodic_timer: return "timer";
  }
  return "?";
}

inline std::optional<EventKind> event_kind_from_name(const std::string& s) {
  if (s == "join") return EventKind::join;
  if (s == "leave") return EventKind::leave;
  if (s == "handover") return EventKind::handover;
  if (s == "link_fail") return EventKind::link_fail;
  if (s == "link_restore") return EventKind::link_restore;
  if (s == "node_fail") return EventKind::node_fail;
  if (s == "node_restore") return EventKind::node_restore;
  if (s == "timer" || s == "periodic_timer") return EventKind::periodic_timer;
  return std::nullopt;
}

// Argument meaning per kind:
//   join/leave:                a = node (join) / member id (leave)
//   handover:                  a = member id, b = current node, c = new node
//   link_fail/link_restore:    a, b = link endpoints
//   node_fail/node_restore:    a = node
//   timer:                     no arguments
struct SessionEvent {
  double time = 0.0;
  EventKind kind = EventKind::periodic_timer;
  NodeId a = 0, b = 0, c = 0;
};

inline std::size_t event_arg_count(EventKind k) {
  switch (k) {
    case EventKind::join:
    case EventKind::leave:
    case EventKind::node_fail:
    case EventKind::node_restore: return 1;
    case EventKind::handover: return 3;
    case EventKind::link_fail:
    case EventKind::link_restore: return 2;
    case EventKind::periodic_timer: return 0;
  }
  return 0;
}

// Trace file line: "<time> <kind> [args...]", '#' lines ignored.
inline std::string format_event(const SessionEvent& ev) {
  std::ostringstream os;
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", ev.time);
  os << buf << " " << event_kind_name(ev.kind);
  std::size_t args = event_arg_count(ev.kind);
  if (args >= 1) os << " " << ev.a;
  if (args >= 2) os << " " << ev.b;
  if (args >= 3) os << " " << ev.c;
  return os.str();
}

inline SessionEvent parse_event_line(const std::string& line) {
  std::istringstream is(line);
  SessionEvent ev;
  std::string kind;
  if (!(is >> ev.time >> kind)) throw std::runtime_error("malformed event: " + line);
  auto k = event_kind_from_name(kind);
  if (!k) throw std::runtime_error("unknown event kind: " + kind);
  ev.kind = *k;
  std::size_t args = event_arg_count(ev.kind);
  long long vals[3] = {0, 0, 0};
  for (std::size_t i = 0; i < args; ++i)
    if (!(is >> vals[i]) || vals[i] < 0)
      throw std::runtime_error("bad arguments for event: " + line);
  std::string extra;
  if (is >> extra) throw std::runtime_error("trailing tokens in event: " + line);
  ev.a = static_cast<NodeId>(vals[0]);
  ev.b = static_cast<NodeId>(vals[1]);
  ev.c = static_cast<NodeId>(vals[2]);
  return ev;
}

inline std::vector<SessionEvent> read_trace(std::istream& is) {
  std::vector<SessionEvent> trace;
  std::string line;
  while (std::getline(is, line)) {
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    trace.push_back(parse_event_line(line.substr(start)));
  }
  return trace;
}

inline void write_trace(std::ostream& os, const std::vector<SessionEvent>& trace) {
  for (const auto& ev : trace) os << format_event(ev) << "\n";
}

// Live session state. The graph is a degradable copy of the base topology;
// failed links/nodes remember their edges so restores can reinstate them.
struct SessionState {
  Graph graph;
  std::vector<char> node_alive;

  // member id -> current attachment node
  std::map<NodeId, NodeId> receiver_members;
  std::map<NodeId, NodeId> source_members;

  // links taken down by link_fail, keyed (min, max); holds both directed attrs
  std::map<std::pair<NodeId, NodeId>, std::pair<EdgeAttr, EdgeAttr>> downed_links;
  // edges removed by node_fail, keyed by the failed node
  std::map<NodeId, std::vector<std::tuple<NodeId, NodeId, EdgeAttr>>> downed_node_edges;

  double clock = 0.0;
  NodeId current_rp = 0;
  std::optional<TreeEvaluation> current_eval;
  std::optional<MulticastTree> current_tree;
  double fitness_at_selection = kInfDelay;

  bool suspended() const { return receiver_members.empty(); }

  // Current group as seen by the evaluator: deduplicated attachment nodes.
  MulticastGroup group_view() const {
    MulticastGroup grp;
    std::set<NodeId> r, s;
    for (const auto& [id, at] : receiver_members) r.insert(at);
    for (const auto& [id, at] : source_members) s.insert(at);
    grp.receivers.assign(r.begin(), r.end());
    grp.sources.assign(s.begin(), s.end());
    return grp;
  }
};

inline SessionState make_session_state(const Graph& g, const MulticastGroup& grp) {
  validate_group(grp, g);
  SessionState st;
  st.graph = g;
  st.node_alive.assign(g.node_count(), 1);
  for (NodeId d : grp.receivers) st.receiver_members.emplace(d, d);
  for (NodeId s : grp.sources) st.source_members.emplace(s, s);
  return st;
}

namespace detail {

inline bool receiver_attached_at(const SessionState& st, NodeId node) {
  for (const auto& [id, at] : st.receiver_members)
    if (at == node) return true;
  return false;
}

}  // namespace detail

// Applies one event, mutating the state. Invariant-violating events throw
// std::invalid_argument (the trace is malformed); the state is unchanged in
// that case. Timer events only advance the clock.
inline void apply_event(SessionState& st, const SessionEvent& ev) {
  if (ev.time < st.clock)
    throw std::invalid_argument("event time goes backwards at t=" +
                                std::to_string(ev.time));
  auto check_node = [&](NodeId v) { st.graph.check_node(v); };
  switch (ev.kind) {
    case EventKind::join: {
      check_node(ev.a);
      if (!st.node_alive[ev.a])
        throw std::invalid_argument("join at failed node " + std::to_string(ev.a));
      if (st.receiver_members.count(ev.a) || detail::receiver_attached_at(st, ev.a))
        throw std::invalid_argument("join of already-member node " +
                                    std::to_string(ev.a));
      st.receiver_members.emplace(ev.a, ev.a);
      break;
    }
    case EventKind::leave: {
      auto it = st.receiver_members.find(ev.a);
      if (it == st.receiver_members.end())
        throw std::invalid_argument("leave of non-member " + std::to_string(ev.a));
      st.receiver_members.erase(it);
      break;
    }
    case EventKind::handover: {
      check_node(ev.b);
      check_node(ev.c);
      auto rit = st.receiver_members.find(ev.a);
      auto sit = st.source_members.find(ev.a);
      std::map<NodeId, NodeId>::iterator mit;
      bool is_receiver;
      if (rit != st.receiver_members.end() && rit->second == ev.b) {
        mit = rit;
        is_receiver = true;
      } else if (sit != st.source_members.end() && sit->second == ev.b) {
        mit = sit;
        is_receiver = false;
      } else {
        throw std::invalid_argument("handover: no member " + std::to_string(ev.a) +
                                    " attached at node " + std::to_string(ev.b));
      }
      if (!st.node_alive[ev.c])
        throw std::invalid_argument("handover target node is down");
      if (is_receiver && ev.c != ev.b && detail::receiver_attached_at(st, ev.c))
        throw std::invalid_argument("handover target already hosts a receiver");
      mit->second = ev.c;
      break;
    }
    case EventKind::link_fail: {
      check_node(ev.a);
      check_node(ev.b);
      if (ev.a == ev.b) throw std::invalid_argument("link_fail: self loop");
      std::pair<NodeId, NodeId> key = std::minmax(ev.a, ev.b);
      const EdgeAttr* fw = st.graph.edge(key.first, key.second);
      const EdgeAttr* bw = st.graph.edge(key.second, key.first);
      if (!fw || !bw)
        throw std::invalid_argument("link_fail of a link that is not up");
      st.downed_links.emplace(key, std::make_pair(*fw, *bw));
      st.graph.remove_edge(key.first, key.second);
      st.graph.remove_edge(key.second, key.first);
      break;
    }
    case EventKind::link_restore: {
      std::pair<NodeId, NodeId> key = std::minmax(ev.a, ev.b);
      auto it = st.downed_links.find(key);
      if (it == st.downed_links.end())
        throw std::invalid_argument("link_restore of a link that was not link-failed");
      if (!st.node_alive[key.first] || !st.node_alive[key.second])
        throw std::invalid_argument("link_restore with a failed endpoint");
      st.graph.add_edge(key.first, key.second, it->second.first);
      st.graph.add_edge(key.second, key.first, it->second.second);
      st.downed_links.erase(it);
      break;
    }
    case EventKind::node_fail: {
      check_node(ev.a);
      if (!st.node_alive[ev.a])
        throw std::invalid_argument("node_fail of already-failed node " +
                                    std::to_string(ev.a));
      auto& store = st.downed_node_edges[ev.a];
      for (const auto& e : st.graph.out_edges(ev.a))
        store.emplace_back(ev.a, e.to, e.attr);
      for (NodeId u = 0; u < st.graph.node_count(); ++u) {
        if (u == ev.a) continue;
        const EdgeAttr* attr = st.graph.edge(u, ev.a);
        if (attr) store.emplace_back(u, ev.a, *attr);
      }
      for (const auto& [u, v, attr] : store) st.graph.remove_edge(u, v);
      st.node_alive[ev.a] = 0;
      break;
    }
    case EventKind::node_restore: {
      check_node(ev.a);
      if (st.node_alive[ev.a])
        throw std::invalid_argument("node_restore of a live node " +
                                    std::to_string(ev.a));
      st.node_alive[ev.a] = 1;
      auto it = st.downed_node_edges.find(ev.a);
      if (it != st.downed_node_edges.end()) {
        std::vector<std::tuple<NodeId, NodeId, EdgeAttr>> edges = std::move(it->second);
        st.downed_node_edges.erase(it);
        for (const auto& [u, v, attr] : edges) {
          NodeId other = (u == ev.a) ? v : u;
          if (!st.node_alive[other]) {
            // The other endpoint is still down; it now owns this edge and
            // will reinstate it on its own restore.
            st.downed_node_edges[other].emplace_back(u, v, attr);
          } else {
            st.graph.add_edge(u, v, attr);
          }
        }
      }
      break;
    }
    case EventKind::periodic_timer:
      break;
  }
  st.clock = ev.time;
}

struct RecoveryConfig {
  // Period of the relocation timer the trace was generated with; informational
  // here (timer events arrive through the trace).
  double period = 0.0;
  // React to membership/topology changes, not just timers and hard failures.
  bool event_driven = true;
  // With event_driven set, a change event triggers reselection only once the
  // current fitness exceeds threshold * (fitness right after the last
  // selection). 1.0 reselects on any degradation; <= 0 reselects on every
  // change event.
  double degradation_threshold = 1.0;
  // Abstract time a broken delivery path stays broken; scales disruption.
  double recovery_delay = 1.0;
};

enum class RecoveryDecision { keep, reselect };

inline bool is_change_event(EventKind k) { return k != EventKind::periodic_timer; }

// Decides whether the RP survives the event that was just applied.
// While the session is suspended (no receivers) nothing is re-optimized, but
// a dead RP is never kept past the event that killed it.
inline RecoveryDecision recovery_policy(const SessionState& st, const SessionEvent& ev,
                                        const RecoveryConfig& pol) {
  if (!st.node_alive[st.current_rp]) return RecoveryDecision::reselect;
  if (st.suspended()) return RecoveryDecision::keep;
  if (ev.kind == EventKind::periodic_timer) return RecoveryDecision::reselect;
  if (!st.current_eval) return RecoveryDecision::reselect;  // RP cut off from a member
  if (is_change_event(ev.kind) && pol.event_driven) {
    if (pol.degradation_threshold <= 0.0) return RecoveryDecision::reselect;
    if (st.current_eval->fitness >
        pol.degradation_threshold * st.fitness_at_selection)
      return RecoveryDecision::reselect;
  }
  return RecoveryDecision::keep;
}

struct SessionMetrics {
  std::vector<std::pair<double, double>> fitness_trajectory;  // (time, fitness)
  std::uint32_t reselections = 0;
  double disruption_units = 0.0;
  std::vector<double> handover_latency_proxy;  // hop distances, +inf if cut off
};

// Unweighted hop distance on the live graph; +inf when disconnected.
inline double hop_distance(const Graph& g, NodeId from, NodeId to) {
  if (from == to) return 0.0;
  std::vector<std::uint32_t> dist(g.node_count(), UINT32_MAX);
  std::vector<NodeId> frontier{from};
  dist[from] = 0;
  std::size_t head = 0;
  while (head < frontier.size()) {
    NodeId u = frontier[head++];
    for (const auto& e : g.out_edges(u)) {
      if (dist[e.to] != UINT32_MAX) continue;
      dist[e.to] = dist[u] + 1;
      if (e.to == to) return dist[e.to];
      frontier.push_back(e.to);
    }
  }
  return kInfDelay;
}

namespace detail {

inline bool path_uses_node(const Path& p, NodeId v) {
  for (NodeId u : p.nodes)
    if (u == v) return true;
  return false;
}

inline bool path_uses_link(const Path& p, NodeId a, NodeId b) {
  for (std::size_t i = 0; i + 1 < p.nodes.size(); ++i) {
    if (p.nodes[i] == a && p.nodes[i + 1] == b) return true;
    if (p.nodes[i] == b && p.nodes[i + 1] == a) return true;
  }
  return false;
}

// Number of receivers whose delivery path through the pre-event tree crosses
// the failed element.
inline std::uint32_t receivers_hit(const MulticastTree& tree, const SessionEvent& ev) {
  std::uint32_t hit = 0;
  for (const Path& p : tree.receiver_paths) {
    bool affected = false;
    if (ev.kind == EventKind::node_fail)
      affected = path_uses_node(p, ev.a);
    else if (ev.kind == EventKind::link_fail)
      affected = path_uses_link(p, ev.a, ev.b);
    if (affected) ++hit;
  }
  return hit;
}

}  // namespace detail

// Observer hook for tests and instrumented runs; called after each event has
// been fully processed.
struct SessionObservation {
  const SessionEvent* event = nullptr;
  RecoveryDecision decision = RecoveryDecision::keep;
  NodeId rp_before = 0;
  NodeId rp_after = 0;
  const SessionState* state = nullptr;
  std::uint32_t selector_invocations = 0;
};

using SessionObserver = std::function<void(const SessionObservation&)>;

struct SessionRunConfig {
  SelectorKind selector = SelectorKind::vns;
  VnsConfig selector_cfg{};
  QosBounds bounds{};
  FitnessWeights weights{};
  VariationScope scope = VariationScope::all_pairs;
  RecoveryConfig recovery{};
};

namespace detail {

// Re-derives the current tree/eval of st.current_rp from the live graph.
inline void refresh_eval(SessionState& st, const SessionRunConfig& cfg) {
  st.current_tree.reset();
  st.current_eval.reset();
  if (st.suspended() || !st.node_alive[st.current_rp]) return;
  auto built = build_shared_tree(st.graph, st.current_rp, st.group_view());
  if (auto* tree = std::get_if<MulticastTree>(&built)) {
    st.current_eval = evaluate_tree(*tree, cfg.bounds, cfg.weights, cfg.scope);
    st.current_tree = std::move(*tree);
  }
}

inline std::uint32_t lowest_live_node(const SessionState& st) {
  for (NodeId v = 0; v < st.graph.node_count(); ++v)
    if (st.node_alive[v]) return v;
  throw std::runtime_error("every node has failed; session cannot continue");
}

}  // namespace detail

// Replays a trace. The whole trace is validated against a scratch state
// first, so a malformed trace is rejected before any simulation output is
// produced. Selector invocations get derived seeds mix(rng_seed, invocation
// index) and warm-start from the surviving RP when it is still alive.
inline SessionMetrics run_session(const Graph& base, const MulticastGroup& grp,
                                  const std::vector<SessionEvent>& trace,
                                  const SessionRunConfig& cfg,
                                  const SessionObserver& observer = {}) {
  validate_bounds(cfg.bounds);
  {
    SessionState probe = make_session_state(base, grp);
    for (const auto& ev : trace) apply_event(probe, ev);
  }

  SessionState st = make_session_state(base, grp);
  SessionMetrics metrics;
  std::uint32_t invocations = 0;

  auto live_candidates = [&]() {
    std::vector<NodeId> cand;
    for (NodeId v = 0; v < st.graph.node_count(); ++v)
      if (st.node_alive[v]) cand.push_back(v);
    return cand;
  };

  auto select_now = [&](std::optional<NodeId> warm_start) {
    if (st.suspended()) {
      // Nothing to optimize; park the RP on the lowest-id live node.
      st.current_rp = detail::lowest_live_node(st);
      ++invocations;
      detail::refresh_eval(st, cfg);
      st.fitness_at_selection = kInfDelay;
      return;
    }
    VnsConfig sel = cfg.selector_cfg;
    sel.rng_seed = mix_seed(cfg.selector_cfg.rng_seed, invocations);
    if (warm_start && st.node_alive[*warm_start])
      sel.initial = InitialSolution::at(*warm_start);
    RpEvaluator ev(st.graph, st.group_view(), cfg.bounds, cfg.weights, cfg.scope,
                   live_candidates());
    SelectionResult res = run_selector(cfg.selector, ev, sel);
    ++invocations;
    st.current_rp = res.rp;
    detail::refresh_eval(st, cfg);
    st.fitness_at_selection = st.current_eval ? st.current_eval->fitness : kInfDelay;
  };

  select_now(std::nullopt);
  if (st.current_eval)
    metrics.fitness_trajectory.emplace_back(st.clock, st.current_eval->fitness);

  for (const auto& ev : trace) {
    std::optional<MulticastTree> pre_tree = st.current_tree;
    NodeId rp_before = st.current_rp;
    // Resolved the same way apply_event does: the receiver identity wins when
    // a source shares its member id and attachment.
    bool moves_receiver = ev.kind == EventKind::handover &&
                          st.receiver_members.count(ev.a) &&
                          st.receiver_members.at(ev.a) == ev.b;
    apply_event(st, ev);

    if (pre_tree && (ev.kind == EventKind::link_fail || ev.kind == EventKind::node_fail))
      metrics.disruption_units +=
          detail::receivers_hit(*pre_tree, ev) * cfg.recovery.recovery_delay;
    if (ev.kind == EventKind::handover) {
      // A receiver in motion loses its own feed; a moving source interrupts
      // every receiver it serves.
      double hit =
          moves_receiver ? 1.0 : static_cast<double>(st.receiver_members.size());
      metrics.disruption_units += hit * cfg.recovery.recovery_delay;
      metrics.handover_latency_proxy.push_back(hop_distance(st.graph, ev.b, ev.c));
    }

    detail::refresh_eval(st, cfg);
    RecoveryDecision decision = recovery_policy(st, ev, cfg.recovery);
    if (decision == RecoveryDecision::reselect) {
      ++metrics.reselections;
      select_now(st.node_alive[st.current_rp]
                     ? std::optional<NodeId>(st.current_rp)
                     : std::nullopt);
    }
    if (st.current_eval)
      metrics.fitness_trajectory.emplace_back(st.clock, st.current_eval->fitness);

    if (observer) {
      SessionObservation obs;
      obs.event = &ev;
      obs.decision = decision;
      obs.rp_before = rp_before;
      obs.rp_after = st.current_rp;
      obs.state = &st;
      obs.selector_invocations = invocations;
      observer(obs);
    }
  }
  return metrics;
}

// Poisson-driven random trace generation. Each event kind draws its arrival
// times from its own seed stream, so changing one rate never perturbs the
// arrival times of the other kinds; in particular raising
// mobility_speed_proxy only densifies the handover stream. Repairs are
// scheduled a fixed repair_time after each accepted failure. Every emitted
// event is validated against a scratch session state, so generated traces
// always replay cleanly.
struct TraceParams {
  double duration = 100.0;
  double join_rate = 0.0;
  double leave_rate = 0.0;
  double handover_rate = 0.0;
  double mobility_speed_proxy = 1.0;  // multiplies handover_rate
  double link_fail_rate = 0.0;
  double node_fail_rate = 0.0;
  double repair_time = 10.0;  // 0 disables restores
  double timer_period = 0.0;  // 0 disables periodic timers
};

inline std::vector<SessionEvent> generate_trace(const Graph& base,
                                                const MulticastGroup& grp,
                                                const TraceParams& params,
                                                std::uint64_t seed) {
  if (!(params.duration >= 0.0))
    throw std::invalid_argument("trace duration must be >= 0");
  struct Arrival {
    double time;
    int rank;  // deterministic order for equal times
    std::uint64_t seq;
    EventKind kind;
  };
  std::vector<Arrival> pending;
  std::uint64_t seq = 0;
  auto pour = [&](EventKind kind, double rate, int rank, std::uint64_t salt) {
    if (!(rate > 0.0)) return;
    Rng stream(mix_seed(seed, salt));
    double t = 0.0;
    while (true) {
      t += stream.exponential(rate);
      if (t > params.duration) break;
      pending.push_back(Arrival{t, rank, seq++, kind});
    }
  };
  pour(EventKind::join, params.join_rate, 1, 0x6a6f696eull);
  pour(EventKind::leave, params.leave_rate, 2, 0x6c656176ull);
  pour(EventKind::handover, params.handover_rate * params.mobility_speed_proxy, 3,
       0x686f7672ull);
  pour(EventKind::link_fail, params.link_fail_rate, 4, 0x6c6b666cull);
  pour(EventKind::node_fail, params.node_fail_rate, 5, 0x6e64666cull);
  if (params.timer_period > 0.0 && std::isfinite(params.timer_period))
    for (double t = params.timer_period; t <= params.duration; t += params.timer_period)
      pending.push_back(Arrival{t, 6, seq++, EventKind::periodic_timer});
  // Restores injected at rank 0 so a repair lands before same-instant events.
  std::sort(pending.begin(), pending.end(), [](const Arrival& x, const Arrival& y) {
    if (x.time != y.time) return x.time < y.time;
    if (x.rank != y.rank) return x.rank < y.rank;
    return x.seq < y.seq;
  });

  SessionState mirror = make_session_state(base, grp);
  Rng args(mix_seed(seed, 0x61726773ull));
  std::vector<SessionEvent> trace;

  auto try_emit = [&](SessionEvent ev) {
    SessionState saved = mirror;
    try {
      apply_event(mirror, ev);
    } catch (const std::invalid_argument&) {
      mirror = std::move(saved);
      return false;
    }
    trace.push_back(ev);
    return true;
  };

  std::size_t next = 0;
  std::vector<Arrival> queue = std::move(pending);
  std::vector<SessionEvent> scheduled_restores;  // kept sorted by time
  auto pop_restore_before = [&](double t) -> std::optional<SessionEvent> {
    if (scheduled_restores.empty()) return std::nullopt;
    if (scheduled_restores.front().time > t) return std::nullopt;
    SessionEvent ev = scheduled_restores.front();
    scheduled_restores.erase(scheduled_restores.begin());
    return ev;
  };
  auto schedule_restore = [&](SessionEvent ev) {
    auto it = scheduled_restores.begin();
    while (it != scheduled_restores.end() && it->time <= ev.time) ++it;
    scheduled_restores.insert(it, ev);
  };

  auto handle = [&](const Arrival& arr) {
    SessionEvent ev;
    ev.time = arr.time;
    ev.kind = arr.kind;
    switch (arr.kind) {
      case EventKind::join: {
        std::vector<NodeId> options;
        for (NodeId v = 0; v < mirror.graph.node_count(); ++v)
          if (mirror.node_alive[v] && !mirror.receiver_members.count(v) &&
              !detail::receiver_attached_at(mirror, v))
            options.push_back(v);
        if (options.empty()) return;
        ev.a = options[args.uniform_index(options.size())];
        break;
      }
      case EventKind::leave: {
        if (mirror.receiver_members.empty()) return;
        std::vector<NodeId> ids;
        for (const auto& [id, at] : mirror.receiver_members) ids.push_back(id);
        ev.a = ids[args.uniform_index(ids.size())];
        break;
      }
      case EventKind::handover: {
        std::vector<std::pair<NodeId, bool>> members;  // (id, is_receiver)
        for (const auto& [id, at] : mirror.receiver_members)
          members.emplace_back(id, true);
        for (const auto& [id, at] : mirror.source_members)
          members.emplace_back(id, false);
        if (members.empty()) return;
        auto [id, is_receiver] = members[args.uniform_index(members.size())];
        NodeId from = is_receiver ? mirror.receiver_members.at(id)
                                  : mirror.source_members.at(id);
        if (!is_receiver) {
          // A receiver with the same id and attachment would capture this
          // handover; skip the ambiguous case.
          auto twin = mirror.receiver_members.find(id);
          if (twin != mirror.receiver_members.end() && twin->second == from) return;
        }
        std::vector<NodeId> targets;
        for (NodeId v = 0; v < mirror.graph.node_count(); ++v) {
          if (!mirror.node_alive[v] || v == from) continue;
          if (is_receiver && detail::receiver_attached_at(mirror, v)) continue;
          targets.push_back(v);
        }
        if (targets.empty()) return;
        ev.a = id;
        ev.b = from;
        ev.c = targets[args.uniform_index(targets.size())];
        break;
      }
      case EventKind::link_fail: {
        std::vector<std::pair<NodeId, NodeId>> links;
        for (NodeId u = 0; u < mirror.graph.node_count(); ++u)
          for (const auto& e : mirror.graph.out_edges(u))
            if (u < e.to && mirror.graph.has_edge(e.to, u))
              links.emplace_back(u, e.to);
        if (links.empty()) return;
        auto [u, v] = links[args.uniform_index(links.size())];
        ev.a = u;
        ev.b = v;
        if (try_emit(ev) && params.repair_time > 0.0 &&
            ev.time + params.repair_time <= params.duration) {
          SessionEvent fix{ev.time + params.repair_time, EventKind::link_restore,
                           ev.a, ev.b, 0};
          schedule_restore(fix);
        }
        return;
      }
      case EventKind::node_fail: {
        std::vector<NodeId> alive;
        for (NodeId v = 0; v < mirror.graph.node_count(); ++v)
          if (mirror.node_alive[v]) alive.push_back(v);
        if (alive.size() <= 1) return;  // never take the last node down
        ev.a = alive[args.uniform_index(alive.size())];
        if (try_emit(ev) && params.repair_time > 0.0 &&
            ev.time + params.repair_time <= params.duration) {
          SessionEvent fix{ev.time + params.repair_time, EventKind::node_restore,
                           ev.a, 0, 0};
          schedule_restore(fix);
        }
        return;
      }
      case EventKind::periodic_timer:
        break;
      default:
        return;
    }
    try_emit(ev);
  };

  while (next < queue.size() || !scheduled_restores.empty()) {
    double horizon = next < queue.size() ? queue[next].time : kInfDelay;
    if (auto fix = pop_restore_before(horizon)) {
      try_emit(*fix);  // silently dropped when an endpoint is still down
      continue;
    }
    if (next >= queue.size()) break;
    handle(queue[next++]);
  }
  return trace;
}

}  // namespace rpsel
