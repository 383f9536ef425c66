// Drives the real binary end to end. The path comes from RPBENCH_BIN
// (set by ctest); falls back to ./rpbench next to the test.
#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rpsel/io.hpp"
#include "rpsel/selectors.hpp"

namespace fs = std::filesystem;
using namespace rpsel;

namespace {

const std::string& bin() {
  static std::string path = [] {
    const char* env = std::getenv("RPBENCH_BIN");
    return std::string(env ? env : "./rpbench");
  }();
  return path;
}

struct CmdResult {
  int status = -1;
  std::string out;  // stdout+stderr interleaved
};

CmdResult run_cli(const std::string& args) {
  CmdResult r;
  std::string cmd = bin() + " " + args + " 2>&1";
  FILE* p = popen(cmd.c_str(), "r");
  REQUIRE(p != nullptr);
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof(buf), p)) > 0) r.out.append(buf, n);
  int rc = pclose(p);
  r.status = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  return r;
}

fs::path fresh_dir(const std::string& tag) {
  fs::path d = fs::temp_directory_path() / ("rpbench_test_" + tag);
  fs::remove_all(d);
  fs::create_directories(d);
  return d;
}

std::string slurp(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  REQUIRE(is.good());
  std::ostringstream os;
  os << is.rdbuf();
  return os.str();
}

// Strips lines whose prefix marks run-dependent content (timestamps).
std::string without_timestamps(const std::string& text) {
  std::istringstream is(text);
  std::ostringstream os;
  std::string line;
  while (std::getline(is, line))
    if (line.rfind("# generated: ", 0) != 0) os << line << "\n";
  return os.str();
}

std::string last_data_line(const std::string& text) {
  std::istringstream is(text);
  std::string line, last;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') last = line;
  return last;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> f;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      f.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  f.push_back(cur);
  return f;
}

}  // namespace

TEST_CASE("gen writes a loadable instance and is deterministic") {
  fs::path d = fresh_dir("gen");
  std::string args = "gen --n 40 --alpha 0.5 --beta 0.5 --seed 3 --fraction 0.2 "
                     "--sources 2 --out " + d.string();
  CmdResult r = run_cli(args);
  INFO(r.out);
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("nodes=") != std::string::npos);
  REQUIRE(fs::exists(d / "topo.edges"));
  REQUIRE(fs::exists(d / "topo.group"));

  Graph g = load_edge_list((d / "topo.edges").string());
  MulticastGroup grp = load_group((d / "topo.group").string());
  REQUIRE(g.node_count() >= 2);
  REQUIRE(grp.sources.size() == 2);
  REQUIRE_FALSE(grp.receivers.empty());
  for (NodeId v : grp.receivers) REQUIRE(v < g.node_count());

  fs::path d2 = fresh_dir("gen2");
  CmdResult r2 = run_cli("gen --n 40 --alpha 0.5 --beta 0.5 --seed 3 --fraction 0.2 "
                         "--sources 2 --out " + d2.string());
  REQUIRE(r2.status == 0);
  REQUIRE(slurp(d / "topo.edges") == slurp(d2 / "topo.edges"));
  REQUIRE(slurp(d / "topo.group") == slurp(d2 / "topo.group"));

  SECTION("different seed, different bytes") {
    fs::path d3 = fresh_dir("gen3");
    run_cli("gen --n 40 --alpha 0.5 --beta 0.5 --seed 4 --fraction 0.2 "
            "--sources 2 --out " + d3.string());
    REQUIRE(slurp(d / "topo.edges") != slurp(d3 / "topo.edges"));
  }
  SECTION("missing required flag is a parse error") {
    CmdResult bad = run_cli("gen --out " + d.string());
    REQUIRE(bad.status != 0);
  }
}

TEST_CASE("select on a single-node instance returns the only candidate") {
  fs::path d = fresh_dir("single");
  {
    std::ofstream os(d / "one.edges");
    os << "#nodes 1\n";
    std::ofstream gs(d / "one.group");
    gs << "sources: 0\nreceivers: 0\n";
  }
  CmdResult r = run_cli("select --topology " + (d / "one.edges").string() +
                        " --group " + (d / "one.group").string() + " --algo vns");
  INFO(r.out);
  REQUIRE(r.status == 0);
  auto f = split_csv(last_data_line(r.out));
  REQUIRE(f.size() == 9);
  REQUIRE(f[0] == "one");
  REQUIRE(f[1] == "vns");
  REQUIRE(f[2] == "0");   // rp
  REQUIRE(f[3] == "0");   // cost
  REQUIRE(f[7] == "1");   // feasible
  REQUIRE(f[8] == "0");   // fitness
}

TEST_CASE("select output is reproducible") {
  fs::path d = fresh_dir("repro");
  REQUIRE(run_cli("gen --n 30 --alpha 0.6 --beta 0.6 --seed 9 --out " + d.string())
              .status == 0);
  std::string args = "select --topology " + (d / "topo.edges").string() + " --group " +
                     (d / "topo.group").string() +
                     " --algo vns --seed 12345 --bounds unbounded";
  CmdResult a = run_cli(args);
  CmdResult b = run_cli(args);
  REQUIRE(a.status == 0);
  REQUIRE(a.out == b.out);

  SECTION("trace file is written and well formed") {
    fs::path tf = d / "trace.csv";
    CmdResult t = run_cli(args + " --trace-file " + tf.string());
    REQUIRE(t.status == 0);
    std::string trace = slurp(tf);
    REQUIRE(trace.rfind("iter,k,incumbent,fitness\n", 0) == 0);
    REQUIRE(std::count(trace.begin(), trace.end(), '\n') >= 2);
  }
}

TEST_CASE("select ddvca with no effective delay bound is the variation argmin") {
  fs::path d = fresh_dir("ddvca");
  REQUIRE(run_cli("gen --n 25 --alpha 0.6 --beta 0.6 --seed 21 --out " + d.string())
              .status == 0);
  CmdResult r = run_cli("select --topology " + (d / "topo.edges").string() +
                        " --group " + (d / "topo.group").string() +
                        " --algo ddvca --alpha inf --beta inf");
  INFO(r.out);
  REQUIRE(r.status == 0);
  auto f = split_csv(last_data_line(r.out));
  NodeId rp = static_cast<NodeId>(std::stoul(f[2]));

  Graph g = load_edge_list((d / "topo.edges").string());
  MulticastGroup grp = load_group((d / "topo.group").string());
  double best = kInfDelay;
  for (NodeId v = 0; v < g.node_count(); ++v) {
    auto built = build_shared_tree(g, v, grp);
    if (auto* t = std::get_if<MulticastTree>(&built))
      best = std::min(best, evaluate_tree(*t, QosBounds{}).delay_variation);
  }
  auto built = build_shared_tree(g, rp, grp);
  REQUIRE(std::holds_alternative<MulticastTree>(built));
  double got = evaluate_tree(std::get<MulticastTree>(built), QosBounds{}).delay_variation;
  REQUIRE(got == best);
}

TEST_CASE("select error and infeasibility exit codes") {
  fs::path d = fresh_dir("codes");
  SECTION("unreadable topology exits 1") {
    CmdResult r = run_cli("select --topology " + (d / "nope.edges").string() +
                          " --group " + (d / "nope.group").string());
    REQUIRE(r.status == 1);
    REQUIRE(r.out.find("error:") != std::string::npos);
  }
  SECTION("unknown algorithm exits 1") {
    std::ofstream(d / "e.edges") << "#nodes 1\n";
    std::ofstream(d / "g.group") << "sources: 0\nreceivers: 0\n";
    CmdResult r = run_cli("select --topology " + (d / "e.edges").string() + " --group " +
                          (d / "g.group").string() + " --algo simulated-annealing");
    REQUIRE(r.status == 1);
  }
  SECTION("violated delay bound exits 2 but still reports the row") {
    REQUIRE(run_cli("gen --n 20 --alpha 0.7 --beta 0.7 --seed 2 --out " + d.string())
                .status == 0);
    CmdResult r = run_cli("select --topology " + (d / "topo.edges").string() +
                          " --group " + (d / "topo.group").string() +
                          " --algo vns --alpha 0.0001");
    INFO(r.out);
    REQUIRE(r.status == 2);
    auto f = split_csv(last_data_line(r.out));
    REQUIRE(f[7] == "0");                         // infeasible
    REQUIRE(std::stod(f[8]) > std::stod(f[3]));   // fitness carries the penalty
  }
}

TEST_CASE("compare sweep produces stable csv outputs") {
  fs::path d1 = fresh_dir("cmp1");
  fs::path d2 = fresh_dir("cmp2");
  std::string common = "compare --sizes 10,14 --instances 2 --algos vns,random,ddvca "
                       "--seed 5 --group-fraction 0.3 --out ";
  CmdResult a = run_cli(common + d1.string());
  INFO(a.out);
  REQUIRE(a.status == 0);
  REQUIRE(a.out.find("rows=12 errors=0") != std::string::npos);
  REQUIRE(fs::exists(d1 / "results.csv"));
  REQUIRE(fs::exists(d1 / "aggregates.csv"));

  CmdResult b = run_cli(common + d2.string());
  REQUIRE(b.status == 0);
  REQUIRE(without_timestamps(slurp(d1 / "results.csv")) ==
          without_timestamps(slurp(d2 / "results.csv")));
  REQUIRE(without_timestamps(slurp(d1 / "aggregates.csv")) ==
          without_timestamps(slurp(d2 / "aggregates.csv")));

  std::istringstream is(slurp(d1 / "results.csv"));
  std::string line;
  std::size_t data = 0;
  while (std::getline(is, line))
    if (!line.empty() && line[0] != '#') ++data;
  REQUIRE(data == 1 + 12);  // header + rows
}

TEST_CASE("compare honors a json config file with flag overrides") {
  fs::path d = fresh_dir("cfg");
  nlohmann::json j;
  j["network_sizes"] = {12};
  j["instances_per_size"] = 4;
  j["algorithms"] = {"vns", "random"};
  j["waxman_alpha"] = 0.5;
  j["waxman_beta"] = 0.5;
  j["group_fraction"] = 0.25;
  j["base_seed"] = 77;
  {
    std::ofstream os(d / "exp.json");
    os << j.dump(2) << "\n";
  }
  CmdResult r = run_cli("compare --config " + (d / "exp.json").string() +
                        " --instances 1 --out " + d.string());
  INFO(r.out);
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("rows=2 errors=0") != std::string::npos);

  // The echoed config reflects the override.
  std::istringstream is(slurp(d / "results.csv"));
  std::string line, echo;
  while (std::getline(is, line))
    if (line.rfind("# config: ", 0) == 0) echo = line.substr(10);
  REQUIRE_FALSE(echo.empty());
  auto parsed = nlohmann::json::parse(echo);
  REQUIRE(parsed.at("instances_per_size") == 1);
  REQUIRE(parsed.at("base_seed") == 77);
}

TEST_CASE("simulate sweep emits parseable session reports") {
  fs::path d = fresh_dir("sim");
  CmdResult r = run_cli(
      "simulate --sizes 12 --instances 2 --algos vns,random --seed 8 "
      "--group-fraction 0.3 --duration 30 --join-rate 0.2 --leave-rate 0.1 "
      "--handover-rate 0.3 --link-fail-rate 0.05 --timer-period 15 --out " +
      d.string());
  INFO(r.out);
  REQUIRE(r.status == 0);
  REQUIRE(r.out.find("sessions=4 errors=0") != std::string::npos);
  REQUIRE(fs::exists(d / "session_aggregates.csv"));

  auto doc = nlohmann::json::parse(slurp(d / "sessions.json"));
  REQUIRE(doc.at("sessions").size() == 4);
  for (const auto& s : doc.at("sessions")) {
    REQUIRE(s.contains("reselections"));
    REQUIRE(s.at("fitness_trajectory").is_array());
    REQUIRE_FALSE(s.at("fitness_trajectory").empty());
  }
  SECTION("rerun matches modulo timestamps") {
    fs::path d2 = fresh_dir("sim2");
    CmdResult r2 = run_cli(
        "simulate --sizes 12 --instances 2 --algos vns,random --seed 8 "
        "--group-fraction 0.3 --duration 30 --join-rate 0.2 --leave-rate 0.1 "
        "--handover-rate 0.3 --link-fail-rate 0.05 --timer-period 15 --out " +
        d2.string());
    REQUIRE(r2.status == 0);
    REQUIRE(slurp(d / "sessions.json") == slurp(d2 / "sessions.json"));
    REQUIRE(without_timestamps(slurp(d / "session_aggregates.csv")) ==
            without_timestamps(slurp(d2 / "session_aggregates.csv")));
  }
}

TEST_CASE("candidate restriction narrows the searched set") {
  fs::path d = fresh_dir("cands");
  REQUIRE(run_cli("gen --n 20 --alpha 0.7 --beta 0.7 --seed 6 --out " + d.string())
              .status == 0);
  {
    std::ofstream os(d / "cands.txt");
    os << "0 1 2\n";
  }
  for (const char* algo : {"vns", "random", "ddvca", "akc-variant", "tabu"}) {
    CmdResult r = run_cli("select --topology " + (d / "topo.edges").string() +
                          " --group " + (d / "topo.group").string() + " --algo " + algo +
                          " --candidates " + (d / "cands.txt").string() +
                          " --bounds unbounded");
    INFO(algo << "\n" << r.out);
    REQUIRE(r.status == 0);
    auto f = split_csv(last_data_line(r.out));
    REQUIRE(std::stoul(f[2]) <= 2ul);
  }
}
