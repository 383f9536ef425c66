// bench.hpp - experiment orchestration: instance generation, algorithm
// comparison sweeps, session simulation sweeps, and their CSV/JSON outputs.
//
// Determinism contract: every instance and every selector invocation derives
// its seed from (base_seed, size, instance index, algorithm), so results are
// byte-identical across runs and across --jobs settings. The only
// non-reproducible output line is the '#'-prefixed timestamp comment.

#pragma once

#include <atomic>
#include <cstdint>
#include <ctime>
#include <fstream>
#include <functional>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "rpsel/io.hpp"
#include "rpsel/session.hpp"
#include "rpsel/topology.hpp"

namespace rpsel {

enum class BoundsPolicy { auto_scaled, fixed, unbounded };

inline const char* bounds_policy_name(BoundsPolicy p) {
  switch (p) {
    case BoundsPolicy::auto_scaled: return "auto";
    case BoundsPolicy::fixed: return "fixed";
    case BoundsPolicy::unbounded: return "unbounded";
  }
  return "?";
}

inline std::optional<BoundsPolicy> bounds_policy_from_name(const std::string& s) {
  if (s == "auto") return BoundsPolicy::auto_scaled;
  if (s == "fixed") return BoundsPolicy::fixed;
  if (s == "unbounded") return BoundsPolicy::unbounded;
  return std::nullopt;
}

struct ExperimentConfig {
  std::vector<NodeId> network_sizes{20, 40, 60, 80, 100};
  std::uint32_t instances_per_size = 30;
  double waxman_alpha = 0.2;
  double waxman_beta = 0.2;
  ValueRange cost_range{1.0, 10.0};
  ValueRange delay_range{1.0, 10.0};
  bool symmetric_weights = false;
  double group_fraction = 0.10;
  std::uint32_t n_sources = 1;
  BoundsPolicy bounds_policy = BoundsPolicy::auto_scaled;
  double bounds_factor = 1.5;
  double fixed_delay_bound = kInfDelay;
  double fixed_variation_bound = kInfDelay;
  std::vector<SelectorKind> algorithms{SelectorKind::random_pick, SelectorKind::ddvca,
                                       SelectorKind::akc_variant, SelectorKind::tabu,
                                       SelectorKind::vns};
  std::uint64_t base_seed = 1;
  VariationScope variation_scope = VariationScope::all_pairs;
  double penalty = 1e6;
  VnsConfig vns{};  // shared metaheuristic knobs; per-cell seeds are derived
  TraceParams session{};
  RecoveryConfig recovery{};
  std::uint32_t jobs = 1;
};

// --- JSON round trip (field names match the struct members) ---

// Infinity is legal for the QoS bound fields but JSON has no literal for it;
// encode it as the string "inf".
inline nlohmann::json json_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  return x;
}

inline double double_from_json(const nlohmann::json& j) {
  if (j.is_string()) {
    std::string s = j.get<std::string>();
    if (s == "inf") return kInfDelay;
    if (s == "-inf") return -kInfDelay;
    throw std::invalid_argument("expected a number or \"inf\": " + s);
  }
  return j.get<double>();
}

inline void to_json(nlohmann::json& j, const ValueRange& r) {
  j = nlohmann::json{{"lo", r.lo}, {"hi", r.hi}};
}
inline void from_json(const nlohmann::json& j, ValueRange& r) {
  r.lo = j.value("lo", r.lo);
  r.hi = j.value("hi", r.hi);
}

inline void to_json(nlohmann::json& j, const VnsConfig& c) {
  j = nlohmann::json{{"k_max", c.k_max},
                     {"max_total_iters", c.max_total_iters},
                     {"max_stable_iters", c.max_stable_iters},
                     {"local_search",
                      c.local_search == LocalSearchKind::tabu ? "tabu" : "hill_climb"},
                     {"local_search_iters", c.local_search_iters},
                     {"tabu_tenure", c.tabu_tenure},
                     {"rng_seed", c.rng_seed}};
}
inline void from_json(const nlohmann::json& j, VnsConfig& c) {
  c.k_max = j.value("k_max", c.k_max);
  c.max_total_iters = j.value("max_total_iters", c.max_total_iters);
  c.max_stable_iters = j.value("max_stable_iters", c.max_stable_iters);
  std::string ls = j.value("local_search", std::string("hill_climb"));
  if (ls == "tabu")
    c.local_search = LocalSearchKind::tabu;
  else if (ls == "hill_climb")
    c.local_search = LocalSearchKind::hill_climb;
  else
    throw std::invalid_argument("unknown local_search: " + ls);
  c.local_search_iters = j.value("local_search_iters", c.local_search_iters);
  c.tabu_tenure = j.value("tabu_tenure", c.tabu_tenure);
  c.rng_seed = j.value("rng_seed", c.rng_seed);
}

inline void to_json(nlohmann::json& j, const TraceParams& p) {
  j = nlohmann::json{{"duration", p.duration},
                     {"join_rate", p.join_rate},
                     {"leave_rate", p.leave_rate},
                     {"handover_rate", p.handover_rate},
                     {"mobility_speed_proxy", p.mobility_speed_proxy},
                     {"link_fail_rate", p.link_fail_rate},
                     {"node_fail_rate", p.node_fail_rate},
                     {"repair_time", p.repair_time},
                     {"timer_period", p.timer_period}};
}
inline void from_json(const nlohmann::json& j, TraceParams& p) {
  p.duration = j.value("duration", p.duration);
  p.join_rate = j.value("join_rate", p.join_rate);
  p.leave_rate = j.value("leave_rate", p.leave_rate);
  p.handover_rate = j.value("handover_rate", p.handover_rate);
  p.mobility_speed_proxy = j.value("mobility_speed_proxy", p.mobility_speed_proxy);
  p.link_fail_rate = j.value("link_fail_rate", p.link_fail_rate);
  p.node_fail_rate = j.value("node_fail_rate", p.node_fail_rate);
  p.repair_time = j.value("repair_time", p.repair_time);
  p.timer_period = j.value("timer_period", p.timer_period);
}

inline void to_json(nlohmann::json& j, const RecoveryConfig& c) {
  j = nlohmann::json{{"period", c.period},
                     {"event_driven", c.event_driven},
                     {"degradation_threshold", c.degradation_threshold},
                     {"recovery_delay", c.recovery_delay}};
}
inline void from_json(const nlohmann::json& j, RecoveryConfig& c) {
  c.period = j.value("period", c.period);
  c.event_driven = j.value("event_driven", c.event_driven);
  c.degradation_threshold = j.value("degradation_threshold", c.degradation_threshold);
  c.recovery_delay = j.value("recovery_delay", c.recovery_delay);
}

inline void to_json(nlohmann::json& j, const ExperimentConfig& c) {
  std::vector<std::string> algos;
  for (SelectorKind k : c.algorithms) algos.emplace_back(selector_name(k));
  j = nlohmann::json{{"network_sizes", c.network_sizes},
                     {"instances_per_size", c.instances_per_size},
                     {"waxman_alpha", c.waxman_alpha},
                     {"waxman_beta", c.waxman_beta},
                     {"cost_range", c.cost_range},
                     {"delay_range", c.delay_range},
                     {"symmetric_weights", c.symmetric_weights},
                     {"group_fraction", c.group_fraction},
                     {"n_sources", c.n_sources},
                     {"bounds_policy", bounds_policy_name(c.bounds_policy)},
                     {"bounds_factor", c.bounds_factor},
                     {"fixed_delay_bound", json_double(c.fixed_delay_bound)},
                     {"fixed_variation_bound", json_double(c.fixed_variation_bound)},
                     {"algorithms", algos},
                     {"base_seed", c.base_seed},
                     {"variation_scope",
                      c.variation_scope == VariationScope::receivers_only
                          ? "receivers_only"
                          : "all_pairs"},
                     {"penalty", c.penalty},
                     {"vns", c.vns},
                     {"session", c.session},
                     {"recovery", c.recovery},
                     {"jobs", c.jobs}};
}
inline void from_json(const nlohmann::json& j, ExperimentConfig& c) {
  c.network_sizes = j.value("network_sizes", c.network_sizes);
  c.instances_per_size = j.value("instances_per_size", c.instances_per_size);
  c.waxman_alpha = j.value("waxman_alpha", c.waxman_alpha);
  c.waxman_beta = j.value("waxman_beta", c.waxman_beta);
  if (j.contains("cost_range")) c.cost_range = j.at("cost_range").get<ValueRange>();
  if (j.contains("delay_range")) c.delay_range = j.at("delay_range").get<ValueRange>();
  c.symmetric_weights = j.value("symmetric_weights", c.symmetric_weights);
  c.group_fraction = j.value("group_fraction", c.group_fraction);
  c.n_sources = j.value("n_sources", c.n_sources);
  if (j.contains("bounds_policy")) {
    auto p = bounds_policy_from_name(j.at("bounds_policy").get<std::string>());
    if (!p) throw std::invalid_argument("unknown bounds_policy");
    c.bounds_policy = *p;
  }
  c.bounds_factor = j.value("bounds_factor", c.bounds_factor);
  if (j.contains("fixed_delay_bound"))
    c.fixed_delay_bound = double_from_json(j.at("fixed_delay_bound"));
  if (j.contains("fixed_variation_bound"))
    c.fixed_variation_bound = double_from_json(j.at("fixed_variation_bound"));
  if (j.contains("algorithms")) {
    c.algorithms.clear();
    for (const auto& name : j.at("algorithms")) {
      auto k = selector_from_name(name.get<std::string>());
      if (!k) throw std::invalid_argument("unknown algorithm: " + name.get<std::string>());
      c.algorithms.push_back(*k);
    }
  }
  c.base_seed = j.value("base_seed", c.base_seed);
  if (j.contains("variation_scope")) {
    std::string s = j.at("variation_scope").get<std::string>();
    if (s == "all_pairs")
      c.variation_scope = VariationScope::all_pairs;
    else if (s == "receivers_only")
      c.variation_scope = VariationScope::receivers_only;
    else
      throw std::invalid_argument("unknown variation_scope: " + s);
  }
  c.penalty = j.value("penalty", c.penalty);
  if (j.contains("vns")) c.vns = j.at("vns").get<VnsConfig>();
  if (j.contains("session")) c.session = j.at("session").get<TraceParams>();
  if (j.contains("recovery")) c.recovery = j.at("recovery").get<RecoveryConfig>();
  c.jobs = j.value("jobs", c.jobs);
}

inline void validate_experiment(const ExperimentConfig& cfg) {
  if (cfg.network_sizes.empty()) throw std::invalid_argument("no network sizes");
  for (NodeId n : cfg.network_sizes)
    if (n < 1) throw std::invalid_argument("network size must be >= 1");
  if (cfg.instances_per_size < 1)
    throw std::invalid_argument("instances_per_size must be >= 1");
  if (cfg.algorithms.empty()) throw std::invalid_argument("no algorithms selected");
  if (!(cfg.group_fraction > 0.0) || cfg.group_fraction > 1.0)
    throw std::invalid_argument("group_fraction must be in (0, 1]");
  if (cfg.n_sources < 1) throw std::invalid_argument("n_sources must be >= 1");
  if (!(cfg.bounds_factor > 0.0))
    throw std::invalid_argument("bounds_factor must be > 0");
  if (cfg.bounds_policy == BoundsPolicy::fixed) {
    QosBounds b{cfg.fixed_delay_bound, cfg.fixed_variation_bound};
    validate_bounds(b);
  }
  if (!(cfg.penalty >= 0.0)) throw std::invalid_argument("penalty must be >= 0");
}

// --- instance derivation ---

struct Instance {
  std::string name;
  Graph graph;
  MulticastGroup group;
  QosBounds bounds;
};

inline std::uint64_t instance_seed(const ExperimentConfig& cfg, NodeId size,
                                   std::uint32_t index) {
  return mix_seed(cfg.base_seed, mix_seed(size, index));
}

inline std::string instance_name(NodeId size, std::uint32_t index) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "n%u_i%03u", size, index);
  return buf;
}

// Generates topology -> keeps the largest connected component -> samples the
// member group -> resolves QoS bounds. Throws when the surviving component
// cannot host the requested group.
inline Instance make_instance(const ExperimentConfig& cfg, NodeId size,
                              std::uint32_t index) {
  std::uint64_t seed = instance_seed(cfg, size, index);
  WaxmanParams wp;
  wp.n = size;
  wp.alpha = cfg.waxman_alpha;
  wp.beta = cfg.waxman_beta;
  wp.seed = seed;
  wp.cost_range = cfg.cost_range;
  wp.delay_range = cfg.delay_range;
  wp.symmetric_weights = cfg.symmetric_weights;
  GeneratedTopology topo = waxman_generate(wp);
  ComponentResult lcc = largest_connected_component(topo.graph);

  Instance inst;
  inst.name = instance_name(size, index);
  inst.graph = std::move(lcc.graph);
  inst.group = sample_group(inst.graph, cfg.group_fraction, cfg.n_sources,
                            mix_seed(seed, 0x6d626572ull));
  switch (cfg.bounds_policy) {
    case BoundsPolicy::auto_scaled:
      inst.bounds = auto_bounds(inst.graph, inst.group, cfg.bounds_factor);
      break;
    case BoundsPolicy::fixed:
      inst.bounds = QosBounds{cfg.fixed_delay_bound, cfg.fixed_variation_bound};
      break;
    case BoundsPolicy::unbounded:
      inst.bounds = QosBounds{};
      break;
  }
  return inst;
}

inline std::uint64_t cell_seed(const ExperimentConfig& cfg, NodeId size,
                               std::uint32_t index, SelectorKind algo) {
  return mix_seed(instance_seed(cfg, size, index),
                  0x100 + static_cast<std::uint64_t>(algo));
}

// --- compare sweep ---

struct CompareRow {
  NodeId size = 0;
  std::uint32_t index = 0;
  std::string instance;
  SelectorKind algo = SelectorKind::random_pick;
  QosBounds bounds;
  SelectionResult result;
  bool error = false;
  std::string error_message;
};

// Called for each finished row, from the worker thread that produced it.
using CompareObserver = std::function<void(const CompareRow&)>;

inline VnsConfig cell_vns_config(const ExperimentConfig& cfg, NodeId size,
                                 std::uint32_t index, SelectorKind algo) {
  VnsConfig c = cfg.vns;
  c.compare = CompareMode::penalized;
  c.rng_seed = cell_seed(cfg, size, index, algo);
  return c;
}

inline std::vector<CompareRow> run_compare(const ExperimentConfig& cfg,
                                           const CompareObserver& observer = {}) {
  validate_experiment(cfg);
  struct Task {
    NodeId size;
    std::uint32_t index;
  };
  std::vector<Task> tasks;
  for (NodeId size : cfg.network_sizes)
    for (std::uint32_t i = 0; i < cfg.instances_per_size; ++i)
      tasks.push_back(Task{size, i});
  std::size_t per_instance = cfg.algorithms.size();
  std::vector<CompareRow> rows(tasks.size() * per_instance);

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    CompareRow* slot = &rows[t * per_instance];
    for (std::size_t a = 0; a < per_instance; ++a) {
      slot[a].size = task.size;
      slot[a].index = task.index;
      slot[a].instance = instance_name(task.size, task.index);
      slot[a].algo = cfg.algorithms[a];
    }
    try {
      Instance inst = make_instance(cfg, task.size, task.index);
      RpEvaluator ev(inst.graph, inst.group, inst.bounds,
                     FitnessWeights{cfg.penalty}, cfg.variation_scope);
      for (std::size_t a = 0; a < per_instance; ++a) {
        CompareRow& row = slot[a];
        row.bounds = inst.bounds;
        try {
          VnsConfig vc = cell_vns_config(cfg, task.size, task.index, row.algo);
          row.result = run_selector(row.algo, ev, vc);
        } catch (const std::exception& e) {
          row.error = true;
          row.error_message = e.what();
        }
        if (observer) observer(row);
      }
    } catch (const std::exception& e) {
      // Instance-level failure (e.g. the component cannot host the group):
      // every algorithm cell of this instance becomes an error row.
      for (std::size_t a = 0; a < per_instance; ++a) {
        slot[a].error = true;
        slot[a].error_message = e.what();
        if (observer) observer(slot[a]);
      }
    }
  };

  std::uint32_t jobs = std::max<std::uint32_t>(1, cfg.jobs);
  if (jobs == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::uint32_t w = 0; w < jobs; ++w)
      pool.emplace_back([&]() {
        while (true) {
          std::size_t t = next.fetch_add(1);
          if (t >= tasks.size()) break;
          run_task(t);
        }
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

// --- aggregation ---

struct Aggregate {
  NodeId size = 0;
  SelectorKind algo = SelectorKind::random_pick;
  std::uint32_t n = 0;          // rows with a usable evaluation
  std::uint32_t n_error = 0;
  std::uint32_t n_feasible = 0;
  double mean_cost = 0, sd_cost = 0;
  double mean_max_delay = 0, sd_max_delay = 0;
  double mean_variation = 0, sd_variation = 0;
  double mean_fitness = 0, sd_fitness = 0;
};

namespace detail {

struct Welford {
  std::uint32_t n = 0;
  double mean = 0.0, m2 = 0.0;
  void add(double x) {
    ++n;
    double d = x - mean;
    mean += d / n;
    m2 += d * (x - mean);
  }
  double sd() const { return n > 1 ? std::sqrt(m2 / (n - 1)) : 0.0; }
};

}  // namespace detail

inline std::vector<Aggregate> aggregate_rows(const ExperimentConfig& cfg,
                                             const std::vector<CompareRow>& rows) {
  std::vector<Aggregate> out;
  for (NodeId size : cfg.network_sizes)
    for (SelectorKind algo : cfg.algorithms) {
      Aggregate agg;
      agg.size = size;
      agg.algo = algo;
      detail::Welford cost, max_delay, variation, fitness;
      for (const CompareRow& row : rows) {
        if (row.size != size || row.algo != algo) continue;
        if (row.error) {
          ++agg.n_error;
          continue;
        }
        if (!row.result.eval) {
          ++agg.n_error;  // hard-infeasible: no usable evaluation
          continue;
        }
        const TreeEvaluation& e = *row.result.eval;
        cost.add(e.cost);
        max_delay.add(e.max_delay);
        variation.add(e.delay_variation);
        fitness.add(e.fitness);
        if (e.feasible) ++agg.n_feasible;
      }
      agg.n = cost.n;
      agg.mean_cost = cost.mean;
      agg.sd_cost = cost.sd();
      agg.mean_max_delay = max_delay.mean;
      agg.sd_max_delay = max_delay.sd();
      agg.mean_variation = variation.mean;
      agg.sd_variation = variation.sd();
      agg.mean_fitness = fitness.mean;
      agg.sd_fitness = fitness.sd();
      out.push_back(agg);
    }
  return out;
}

// --- CSV writers ---

// `now` is injectable so tests can pin the only non-deterministic line.
inline std::string timestamp_line(const std::string& now) {
  return "# generated: " + now + "\n";
}

inline std::string current_time_string() {
  std::time_t t = std::time(nullptr);
  char buf[64];
  std::tm tm_utc;
  gmtime_r(&t, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

inline void write_config_comments(std::ostream& os, const ExperimentConfig& cfg) {
  nlohmann::json j = cfg;
  os << "# config: " << j.dump() << "\n";
}

inline void write_results_csv(std::ostream& os, const ExperimentConfig& cfg,
                              const std::vector<CompareRow>& rows,
                              const std::string& now) {
  os << "# rp selection comparison\n" << timestamp_line(now);
  write_config_comments(os, cfg);
  os << "instance,algo,rp,cost,max_delay,min_delay,delay_variation,feasible,fitness\n";
  for (const CompareRow& row : rows) {
    if (row.error) {
      os << "# error " << row.instance << " " << selector_name(row.algo) << ": "
         << row.error_message << "\n";
      continue;
    }
    os << row.instance << "," << selector_name(row.algo) << "," << row.result.rp << ",";
    if (row.result.eval) {
      const TreeEvaluation& e = *row.result.eval;
      os << dtos_short(e.cost) << "," << dtos_short(e.max_delay) << ","
         << dtos_short(e.min_delay) << "," << dtos_short(e.delay_variation) << ","
         << (e.feasible ? 1 : 0) << "," << dtos_short(e.fitness) << "\n";
    } else {
      os << "inf,inf,inf,inf,0,inf\n";
    }
  }
}

inline void write_aggregates_csv(std::ostream& os, const ExperimentConfig& cfg,
                                 const std::vector<Aggregate>& aggs,
                                 const std::string& now) {
  os << "# rp selection aggregates (mean, sample sd)\n" << timestamp_line(now);
  write_config_comments(os, cfg);
  os << "size,algo,n,n_error,n_feasible,mean_cost,sd_cost,mean_max_delay,sd_max_delay,"
        "mean_delay_variation,sd_delay_variation,mean_fitness,sd_fitness\n";
  for (const Aggregate& a : aggs)
    os << a.size << "," << selector_name(a.algo) << "," << a.n << "," << a.n_error << ","
       << a.n_feasible << "," << dtos_short(a.mean_cost) << "," << dtos_short(a.sd_cost)
       << "," << dtos_short(a.mean_max_delay) << "," << dtos_short(a.sd_max_delay) << ","
       << dtos_short(a.mean_variation) << "," << dtos_short(a.sd_variation) << ","
       << dtos_short(a.mean_fitness) << "," << dtos_short(a.sd_fitness) << "\n";
}

// --- session sweep ---

struct SessionRow {
  NodeId size = 0;
  std::uint32_t index = 0;
  std::string instance;
  SelectorKind algo = SelectorKind::random_pick;
  SessionMetrics metrics;
  std::size_t trace_events = 0;
  bool error = false;
  std::string error_message;
};

using SessionRowObserver = std::function<void(const SessionRow&)>;

inline std::vector<SessionRow> run_simulate(const ExperimentConfig& cfg,
                                            const SessionRowObserver& observer = {},
                                            const SessionObserver& event_observer = {}) {
  validate_experiment(cfg);
  struct Task {
    NodeId size;
    std::uint32_t index;
  };
  std::vector<Task> tasks;
  for (NodeId size : cfg.network_sizes)
    for (std::uint32_t i = 0; i < cfg.instances_per_size; ++i)
      tasks.push_back(Task{size, i});
  std::size_t per_instance = cfg.algorithms.size();
  std::vector<SessionRow> rows(tasks.size() * per_instance);

  auto run_task = [&](std::size_t t) {
    const Task& task = tasks[t];
    SessionRow* slot = &rows[t * per_instance];
    for (std::size_t a = 0; a < per_instance; ++a) {
      slot[a].size = task.size;
      slot[a].index = task.index;
      slot[a].instance = instance_name(task.size, task.index);
      slot[a].algo = cfg.algorithms[a];
    }
    try {
      Instance inst = make_instance(cfg, task.size, task.index);
      std::vector<SessionEvent> trace =
          generate_trace(inst.graph, inst.group, cfg.session,
                         mix_seed(instance_seed(cfg, task.size, task.index),
                                  0x74726163ull));
      for (std::size_t a = 0; a < per_instance; ++a) {
        SessionRow& row = slot[a];
        row.trace_events = trace.size();
        try {
          SessionRunConfig rc;
          rc.selector = row.algo;
          rc.selector_cfg = cell_vns_config(cfg, task.size, task.index, row.algo);
          rc.bounds = inst.bounds;
          rc.weights = FitnessWeights{cfg.penalty};
          rc.scope = cfg.variation_scope;
          rc.recovery = cfg.recovery;
          row.metrics = run_session(inst.graph, inst.group, trace, rc, event_observer);
        } catch (const std::exception& e) {
          row.error = true;
          row.error_message = e.what();
        }
        if (observer) observer(row);
      }
    } catch (const std::exception& e) {
      for (std::size_t a = 0; a < per_instance; ++a) {
        slot[a].error = true;
        slot[a].error_message = e.what();
        if (observer) observer(slot[a]);
      }
    }
  };

  std::uint32_t jobs = std::max<std::uint32_t>(1, cfg.jobs);
  if (jobs == 1) {
    for (std::size_t t = 0; t < tasks.size(); ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::uint32_t w = 0; w < jobs; ++w)
      pool.emplace_back([&]() {
        while (true) {
          std::size_t t = next.fetch_add(1);
          if (t >= tasks.size()) break;
          run_task(t);
        }
      });
    for (auto& th : pool) th.join();
  }
  return rows;
}

inline nlohmann::json session_rows_json(const ExperimentConfig& cfg,
                                        const std::vector<SessionRow>& rows) {
  nlohmann::json out;
  out["config"] = cfg;
  nlohmann::json arr = nlohmann::json::array();
  for (const SessionRow& row : rows) {
    nlohmann::json r;
    r["instance"] = row.instance;
    r["algo"] = selector_name(row.algo);
    if (row.error) {
      r["error"] = row.error_message;
    } else {
      r["trace_events"] = row.trace_events;
      r["reselections"] = row.metrics.reselections;
      r["disruption_units"] = row.metrics.disruption_units;
      nlohmann::json lat = nlohmann::json::array();
      for (double h : row.metrics.handover_latency_proxy)
        lat.push_back(std::isfinite(h) ? nlohmann::json(h) : nlohmann::json());
      r["handover_latency_proxy"] = std::move(lat);
      nlohmann::json traj = nlohmann::json::array();
      for (auto [tm, f] : row.metrics.fitness_trajectory)
        traj.push_back(nlohmann::json::array({tm, f}));
      r["fitness_trajectory"] = std::move(traj);
    }
    arr.push_back(std::move(r));
  }
  out["sessions"] = std::move(arr);
  return out;
}

struct SessionAggregate {
  NodeId size = 0;
  SelectorKind algo = SelectorKind::random_pick;
  std::uint32_t n = 0;
  std::uint32_t n_error = 0;
  double mean_reselections = 0, sd_reselections = 0;
  double mean_disruption = 0, sd_disruption = 0;
  double mean_handover_hops = 0;  // over finite latencies across all sessions
  double mean_final_fitness = 0;
};

inline std::vector<SessionAggregate> aggregate_sessions(
    const ExperimentConfig& cfg, const std::vector<SessionRow>& rows) {
  std::vector<SessionAggregate> out;
  for (NodeId size : cfg.network_sizes)
    for (SelectorKind algo : cfg.algorithms) {
      SessionAggregate agg;
      agg.size = size;
      agg.algo = algo;
      detail::Welford resel, disrupt, finalf, hops;
      for (const SessionRow& row : rows) {
        if (row.size != size || row.algo != algo) continue;
        if (row.error) {
          ++agg.n_error;
          continue;
        }
        resel.add(row.metrics.reselections);
        disrupt.add(row.metrics.disruption_units);
        if (!row.metrics.fitness_trajectory.empty())
          finalf.add(row.metrics.fitness_trajectory.back().second);
        for (double h : row.metrics.handover_latency_proxy)
          if (std::isfinite(h)) hops.add(h);
      }
      agg.n = resel.n;
      agg.mean_reselections = resel.mean;
      agg.sd_reselections = resel.sd();
      agg.mean_disruption = disrupt.mean;
      agg.sd_disruption = disrupt.sd();
      agg.mean_handover_hops = hops.mean;
      agg.mean_final_fitness = finalf.mean;
      out.push_back(agg);
    }
  return out;
}

inline void write_session_aggregates_csv(std::ostream& os, const ExperimentConfig& cfg,
                                         const std::vector<SessionAggregate>& aggs,
                                         const std::string& now) {
  os << "# session simulation aggregates\n" << timestamp_line(now);
  write_config_comments(os, cfg);
  os << "size,algo,n,n_error,mean_reselections,sd_reselections,mean_disruption,"
        "sd_disruption,mean_handover_hops,mean_final_fitness\n";
  for (const SessionAggregate& a : aggs)
    os << a.size << "," << selector_name(a.algo) << "," << a.n << "," << a.n_error << ","
       << dtos_short(a.mean_reselections) << "," << dtos_short(a.sd_reselections) << ","
       << dtos_short(a.mean_disruption) << "," << dtos_short(a.sd_disruption) << ","
       << dtos_short(a.mean_handover_hops) << "," << dtos_short(a.mean_final_fitness)
       << "\n";
}

}  // namespace rpsel
