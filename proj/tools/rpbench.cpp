// rpbench - command line front end: topology generation, one-shot RP
// selection, algorithm comparison sweeps, and dynamic session simulation.
//
// Exit codes: 0 success, 1 I/O or configuration error, 2 the selected RP
// violates the QoS bounds (select subcommand).

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "rpsel/bench.hpp"

namespace fs = std::filesystem;
using namespace rpsel;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitInfeasible = 2;

ExperimentConfig load_config_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j = nlohmann::json::parse(is);
  ExperimentConfig cfg;
  from_json(j, cfg);
  return cfg;
}

void ensure_out_dir(const std::string& out) {
  std::error_code ec;
  fs::create_directories(out, ec);
  if (ec) throw std::runtime_error("cannot create output directory: " + out);
}

std::string csv_eval_row(const std::string& instance, const std::string& algo,
                         const SelectionResult& res) {
  std::string line = instance + "," + algo + "," + std::to_string(res.rp) + ",";
  if (res.eval) {
    const TreeEvaluation& e = *res.eval;
    line += dtos_short(e.cost) + "," + dtos_short(e.max_delay) + "," +
            dtos_short(e.min_delay) + "," + dtos_short(e.delay_variation) + "," +
            (e.feasible ? "1" : "0") + "," + dtos_short(e.fitness);
  } else {
    line += "inf,inf,inf,inf,0,inf";
  }
  return line;
}

struct GenArgs {
  NodeId n = 50;
  double alpha = 0.2, beta = 0.2;
  std::uint64_t seed = 1;
  double cost_lo = 1.0, cost_hi = 10.0;
  double delay_lo = 1.0, delay_hi = 10.0;
  bool symmetric = false;
  bool keep_all_components = false;
  double fraction = 0.10;
  std::uint32_t sources = 1;
  std::string out = ".";
  std::string prefix = "topo";
};

int cmd_gen(const GenArgs& a) {
  WaxmanParams wp;
  wp.n = a.n;
  wp.alpha = a.alpha;
  wp.beta = a.beta;
  wp.seed = a.seed;
  wp.cost_range = {a.cost_lo, a.cost_hi};
  wp.delay_range = {a.delay_lo, a.delay_hi};
  wp.symmetric_weights = a.symmetric;
  GeneratedTopology topo = waxman_generate(wp);
  Graph g = std::move(topo.graph);
  if (!a.keep_all_components) {
    ComponentResult lcc = largest_connected_component(g);
    g = std::move(lcc.graph);
  }
  MulticastGroup grp = sample_group(g, a.fraction, a.sources, mix_seed(a.seed, 0x6d626572ull));

  ensure_out_dir(a.out);
  std::string edges_path = a.out + "/" + a.prefix + ".edges";
  std::string group_path = a.out + "/" + a.prefix + ".group";
  save_edge_list(edges_path, g);
  save_group(group_path, grp);

  double mean_degree =
      g.node_count() ? static_cast<double>(g.edge_count()) / g.node_count() : 0.0;
  std::cout << "nodes=" << g.node_count() << " edges=" << g.edge_count()
            << " mean_out_degree=" << dtos_short(mean_degree)
            << " receivers=" << grp.receivers.size() << " sources=" << grp.sources.size()
            << "\n"
            << "wrote " << edges_path << " " << group_path << "\n";
  return kExitOk;
}

struct SelectArgs {
  std::string topology;
  std::string group;
  std::string algo = "vns";
  std::string bounds_policy = "auto";
  double alpha = kInfDelay;  // fixed delay bound
  double beta = kInfDelay;   // fixed variation bound
  double bounds_factor = 1.5;
  double penalty = 1e6;
  std::uint64_t seed = 1;
  std::string scope = "all_pairs";
  std::string candidates_file;
  std::string trace_file;  // metaheuristic trace output
  VnsConfig vns{};
};

int cmd_select(const SelectArgs& a) {
  Graph g = load_edge_list(a.topology);
  MulticastGroup grp = load_group(a.group);
  auto kind = selector_from_name(a.algo);
  if (!kind) throw std::runtime_error("unknown algorithm: " + a.algo);
  auto policy = bounds_policy_from_name(a.bounds_policy);
  if (!policy) throw std::runtime_error("unknown bounds policy: " + a.bounds_policy);

  std::vector<NodeId> candidates;
  if (!a.candidates_file.empty()) {
    std::ifstream is(a.candidates_file);
    if (!is) throw std::runtime_error("cannot open: " + a.candidates_file);
    long long v;
    while (is >> v) {
      if (v < 0) throw std::runtime_error("negative candidate id");
      candidates.push_back(static_cast<NodeId>(v));
    }
    if (candidates.empty())
      throw std::runtime_error("candidate file is empty: " + a.candidates_file);
  }

  VariationScope scope;
  if (a.scope == "all_pairs")
    scope = VariationScope::all_pairs;
  else if (a.scope == "receivers_only")
    scope = VariationScope::receivers_only;
  else
    throw std::runtime_error("unknown variation scope: " + a.scope);

  RpEvaluator ev(g, grp, QosBounds{}, FitnessWeights{a.penalty}, scope, candidates);
  QosBounds bounds;
  switch (*policy) {
    case BoundsPolicy::auto_scaled: bounds = auto_bounds(ev, a.bounds_factor); break;
    case BoundsPolicy::fixed: bounds = QosBounds{a.alpha, a.beta}; break;
    case BoundsPolicy::unbounded: bounds = QosBounds{}; break;
  }
  ev.set_bounds(bounds);

  VnsConfig vc = a.vns;
  vc.rng_seed = a.seed;
  SelectionResult res = run_selector(*kind, ev, vc);

  if (!a.trace_file.empty()) {
    std::ofstream os(a.trace_file);
    if (!os) throw std::runtime_error("cannot open for writing: " + a.trace_file);
    os << "iter,k,incumbent,fitness\n";
    for (const TraceEntry& t : res.trace)
      os << t.iteration << "," << t.k << "," << t.incumbent << ","
         << dtos_short(t.fitness) << "\n";
  }

  std::string name = fs::path(a.topology).stem().string();
  std::cout << "# instance,algo,rp,cost,max_delay,min_delay,delay_variation,feasible,"
               "fitness\n";
  std::cout << "# bounds: delay=" << dtos_short(bounds.delay_bound)
            << " variation=" << dtos_short(bounds.variation_bound)
            << " policy=" << bounds_policy_name(*policy) << "\n";
  std::cout << csv_eval_row(name, selector_name(*kind), res) << "\n";
  return res.eval && res.eval->feasible ? kExitOk : kExitInfeasible;
}

void add_vns_flags(CLI::App* app, VnsConfig& vns) {
  app->add_option("--k-max", vns.k_max, "largest shake neighborhood");
  app->add_option("--max-iters", vns.max_total_iters,
                  "total iteration cap (0 = 100*ceil(log2(n)))");
  app->add_option("--stable-iters", vns.max_stable_iters,
                  "stop after this many non-improving passes");
  std::map<std::string, LocalSearchKind> ls_map{
      {"hill_climb", LocalSearchKind::hill_climb}, {"tabu", LocalSearchKind::tabu}};
  app->add_option("--local-search", vns.local_search, "inner local search")
      ->transform(CLI::CheckedTransformer(ls_map, CLI::ignore_case));
  app->add_option("--ls-iters", vns.local_search_iters,
                  "local search step cap (0 = node count)");
  app->add_option("--tenure", vns.tabu_tenure, "tabu tenure");
}

struct SweepArgs {
  std::string config_file;
  std::string out = "results";
  std::optional<std::uint64_t> seed;
  std::optional<std::uint32_t> jobs;
  std::optional<std::vector<NodeId>> sizes;
  std::optional<std::uint32_t> instances;
  std::optional<std::vector<std::string>> algos;
  std::optional<double> fraction;
  std::optional<std::uint32_t> sources;
  std::optional<std::string> bounds_policy;
  std::optional<double> alpha, beta, bounds_factor, penalty;
  std::optional<bool> symmetric;
  // session-only knobs
  std::optional<double> duration, join_rate, leave_rate, handover_rate, mobility,
      link_fail_rate, node_fail_rate, repair_time, timer_period;
  std::optional<bool> event_driven;
  std::optional<double> threshold, recovery_delay;
};

ExperimentConfig resolve_config(const SweepArgs& a) {
  ExperimentConfig cfg;
  if (!a.config_file.empty()) cfg = load_config_file(a.config_file);
  if (a.seed) cfg.base_seed = *a.seed;
  if (a.jobs) cfg.jobs = *a.jobs;
  if (a.sizes) cfg.network_sizes = *a.sizes;
  if (a.instances) cfg.instances_per_size = *a.instances;
  if (a.algos) {
    cfg.algorithms.clear();
    for (const std::string& name : *a.algos) {
      auto k = selector_from_name(name);
      if (!k) throw std::runtime_error("unknown algorithm: " + name);
      cfg.algorithms.push_back(*k);
    }
  }
  if (a.fraction) cfg.group_fraction = *a.fraction;
  if (a.sources) cfg.n_sources = *a.sources;
  if (a.bounds_policy) {
    auto p = bounds_policy_from_name(*a.bounds_policy);
    if (!p) throw std::runtime_error("unknown bounds policy: " + *a.bounds_policy);
    cfg.bounds_policy = *p;
  }
  if (a.alpha) cfg.fixed_delay_bound = *a.alpha;
  if (a.beta) cfg.fixed_variation_bound = *a.beta;
  if (a.bounds_factor) cfg.bounds_factor = *a.bounds_factor;
  if (a.penalty) cfg.penalty = *a.penalty;
  if (a.symmetric) cfg.symmetric_weights = *a.symmetric;
  if (a.duration) cfg.session.duration = *a.duration;
  if (a.join_rate) cfg.session.join_rate = *a.join_rate;
  if (a.leave_rate) cfg.session.leave_rate = *a.leave_rate;
  if (a.handover_rate) cfg.session.handover_rate = *a.handover_rate;
  if (a.mobility) cfg.session.mobility_speed_proxy = *a.mobility;
  if (a.link_fail_rate) cfg.session.link_fail_rate = *a.link_fail_rate;
  if (a.node_fail_rate) cfg.session.node_fail_rate = *a.node_fail_rate;
  if (a.repair_time) cfg.session.repair_time = *a.repair_time;
  if (a.timer_period) {
    cfg.session.timer_period = *a.timer_period;
    cfg.recovery.period = *a.timer_period;
  }
  if (a.event_driven) cfg.recovery.event_driven = *a.event_driven;
  if (a.threshold) cfg.recovery.degradation_threshold = *a.threshold;
  if (a.recovery_delay) cfg.recovery.recovery_delay = *a.recovery_delay;
  return cfg;
}

int cmd_compare(const SweepArgs& a) {
  ExperimentConfig cfg = resolve_config(a);
  validate_experiment(cfg);
  std::vector<CompareRow> rows = run_compare(cfg);
  ensure_out_dir(a.out);
  std::string now = current_time_string();
  {
    std::ofstream os(a.out + "/results.csv");
    if (!os) throw std::runtime_error("cannot write results.csv");
    write_results_csv(os, cfg, rows, now);
  }
  {
    std::ofstream os(a.out + "/aggregates.csv");
    if (!os) throw std::runtime_error("cannot write aggregates.csv");
    write_aggregates_csv(os, cfg, aggregate_rows(cfg, rows), now);
  }
  std::size_t errors = 0;
  for (const CompareRow& r : rows)
    if (r.error) ++errors;
  std::cout << "rows=" << rows.size() - errors << " errors=" << errors << " out="
            << a.out << "/results.csv " << a.out << "/aggregates.csv\n";
  return kExitOk;
}

int cmd_simulate(const SweepArgs& a) {
  ExperimentConfig cfg = resolve_config(a);
  validate_experiment(cfg);
  std::vector<SessionRow> rows = run_simulate(cfg);
  ensure_out_dir(a.out);
  std::string now = current_time_string();
  {
    std::ofstream os(a.out + "/sessions.json");
    if (!os) throw std::runtime_error("cannot write sessions.json");
    os << session_rows_json(cfg, rows).dump(2) << "\n";
  }
  {
    std::ofstream os(a.out + "/session_aggregates.csv");
    if (!os) throw std::runtime_error("cannot write session_aggregates.csv");
    write_session_aggregates_csv(os, cfg, aggregate_sessions(cfg, rows), now);
  }
  std::size_t errors = 0;
  for (const SessionRow& r : rows)
    if (r.error) ++errors;
  std::cout << "sessions=" << rows.size() - errors << " errors=" << errors << " out="
            << a.out << "/sessions.json " << a.out << "/session_aggregates.csv\n";
  return kExitOk;
}

void add_sweep_flags(CLI::App* app, SweepArgs& a, bool session_knobs) {
  app->add_option("--config", a.config_file, "JSON experiment config");
  app->add_option("--out", a.out, "output directory");
  app->add_option("--seed", a.seed, "base seed");
  app->add_option("--jobs", a.jobs, "worker threads");
  app->add_option("--sizes", a.sizes, "network sizes")->delimiter(',');
  app->add_option("--instances", a.instances, "instances per size");
  app->add_option("--algos", a.algos, "algorithms to run")->delimiter(',');
  app->add_option("--group-fraction", a.fraction, "receiver fraction of nodes");
  app->add_option("--sources", a.sources, "number of sources");
  app->add_option("--bounds", a.bounds_policy, "bounds policy: auto|fixed|unbounded");
  app->add_option("--alpha", a.alpha, "fixed delay bound");
  app->add_option("--beta", a.beta, "fixed variation bound");
  app->add_option("--bounds-factor", a.bounds_factor, "auto bounds scale factor");
  app->add_option("--penalty", a.penalty, "infeasibility penalty weight");
  app->add_flag("--symmetric-weights", a.symmetric,
                "reverse link attributes copy the forward draw");
  if (session_knobs) {
    app->add_option("--duration", a.duration, "trace duration");
    app->add_option("--join-rate", a.join_rate, "join events per unit time");
    app->add_option("--leave-rate", a.leave_rate, "leave events per unit time");
    app->add_option("--handover-rate", a.handover_rate, "handover base rate");
    app->add_option("--mobility", a.mobility, "mobility speed proxy (scales handovers)");
    app->add_option("--link-fail-rate", a.link_fail_rate, "link failures per unit time");
    app->add_option("--node-fail-rate", a.node_fail_rate, "node failures per unit time");
    app->add_option("--repair-time", a.repair_time, "failure repair delay (0 = never)");
    app->add_option("--timer-period", a.timer_period, "periodic reselection timer");
    app->add_option("--event-driven", a.event_driven,
                    "reselect on membership/topology changes");
    app->add_option("--threshold", a.threshold, "degradation threshold");
    app->add_option("--recovery-delay", a.recovery_delay,
                    "time a broken subtree stays broken");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"RP selection benchmark for shared multicast trees"};
  app.require_subcommand(1);

  GenArgs gen;
  CLI::App* gen_cmd = app.add_subcommand("gen", "generate a random topology + group");
  gen_cmd->add_option("--n", gen.n, "node count")->required();
  gen_cmd->add_option("--alpha", gen.alpha, "waxman alpha");
  gen_cmd->add_option("--beta", gen.beta, "waxman beta");
  gen_cmd->add_option("--seed", gen.seed, "seed");
  gen_cmd->add_option("--cost-lo", gen.cost_lo, "min edge cost");
  gen_cmd->add_option("--cost-hi", gen.cost_hi, "max edge cost");
  gen_cmd->add_option("--delay-lo", gen.delay_lo, "min edge delay");
  gen_cmd->add_option("--delay-hi", gen.delay_hi, "max edge delay");
  gen_cmd->add_flag("--symmetric-weights", gen.symmetric,
                    "reverse link attributes copy the forward draw");
  gen_cmd->add_flag("--keep-all-components", gen.keep_all_components,
                    "skip largest-component extraction");
  gen_cmd->add_option("--fraction", gen.fraction, "receiver fraction");
  gen_cmd->add_option("--sources", gen.sources, "source count");
  gen_cmd->add_option("--out", gen.out, "output directory");
  gen_cmd->add_option("--prefix", gen.prefix, "output file prefix");

  SelectArgs sel;
  CLI::App* sel_cmd = app.add_subcommand("select", "run one selector on one instance");
  sel_cmd->add_option("--topology", sel.topology, "edge list file")->required();
  sel_cmd->add_option("--group", sel.group, "group file")->required();
  sel_cmd->add_option("--algo", sel.algo, "random|ddvca|akc-variant|tabu|vns");
  sel_cmd->add_option("--bounds", sel.bounds_policy, "auto|fixed|unbounded");
  sel_cmd->add_option("--alpha", sel.alpha, "fixed delay bound (sets --bounds fixed)");
  sel_cmd->add_option("--beta", sel.beta, "fixed variation bound (sets --bounds fixed)");
  sel_cmd->add_option("--bounds-factor", sel.bounds_factor, "auto bounds scale factor");
  sel_cmd->add_option("--penalty", sel.penalty, "infeasibility penalty weight");
  sel_cmd->add_option("--seed", sel.seed, "selector seed");
  sel_cmd->add_option("--variation-scope", sel.scope, "all_pairs|receivers_only");
  sel_cmd->add_option("--candidates", sel.candidates_file,
                      "file of node ids allowed as RP");
  sel_cmd->add_option("--trace-file", sel.trace_file, "write metaheuristic trace CSV");
  add_vns_flags(sel_cmd, sel.vns);

  SweepArgs cmp;
  CLI::App* cmp_cmd = app.add_subcommand("compare", "sweep algorithms over instances");
  add_sweep_flags(cmp_cmd, cmp, false);

  SweepArgs sim;
  CLI::App* sim_cmd = app.add_subcommand("simulate", "dynamic session simulation sweep");
  add_sweep_flags(sim_cmd, sim, true);

  CLI11_PARSE(app, argc, argv);

  try {
    if (gen_cmd->parsed()) return cmd_gen(gen);
    if (sel_cmd->parsed()) {
      // Explicit fixed bounds switch the policy unless the user overrode it.
      if ((sel_cmd->count("--alpha") || sel_cmd->count("--beta")) &&
          !sel_cmd->count("--bounds"))
        sel.bounds_policy = "fixed";
      return cmd_select(sel);
    }
    if (cmp_cmd->parsed()) return cmd_compare(cmp);
    if (sim_cmd->parsed()) return cmd_simulate(sim);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
