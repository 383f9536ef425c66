// io.hpp - plain-text formats: edge lists, group files, CSV helpers.
//
// Edge-list format:
//   #nodes <N>
//   # free-form comment
//   <u> <v> <cost> <delay>
// One directed edge per line. Doubles are written with %.17g so that a
// write/load round trip reproduces the graph bit for bit.
//
// Group file format:
//   sources: 0 3
//   receivers: 1 2 4

#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "rpsel/graph.hpp"
#include "rpsel/metrics.hpp"

namespace rpsel {

// Shortest decimal form that still round-trips exactly through strtod.
inline std::string dtos(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

// Compact form for human-facing CSV columns (not required to round-trip).
inline std::string dtos_short(double x) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", x);
  return buf;
}

inline void write_edge_list(std::ostream& os, const Graph& g) {
  os << "#nodes " << g.node_count() << "\n";
  for (NodeId u = 0; u < g.node_count(); ++u)
    for (const auto& e : g.out_edges(u))
      os << u << " " << e.to << " " << dtos(e.attr.cost) << " " << dtos(e.attr.delay)
         << "\n";
}

inline void save_edge_list(const std::string& path, const Graph& g) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_edge_list(os, g);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline Graph read_edge_list(std::istream& is) {
  std::string line;
  bool have_n = false;
  Graph g;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos) continue;
    if (line[start] == '#') {
      std::istringstream hs(line.substr(start));
      std::string tag;
      hs >> tag;
      if (tag == "#nodes") {
        long long n = -1;
        if (!(hs >> n) || n < 0)
          throw std::runtime_error("bad #nodes header at line " + std::to_string(lineno));
        if (have_n) throw std::runtime_error("duplicate #nodes header");
        g = Graph(static_cast<NodeId>(n));
        have_n = true;
      }
      continue;
    }
    if (!have_n)
      throw std::runtime_error("edge line before #nodes header at line " +
                               std::to_string(lineno));
    std::istringstream ls(line);
    long long u = -1, v = -1;
    double cost = 0.0, delay = 0.0;
    if (!(ls >> u >> v >> cost >> delay) || u < 0 || v < 0)
      throw std::runtime_error("malformed edge line " + std::to_string(lineno) + ": " +
                               line);
    std::string rest;
    if (ls >> rest)
      throw std::runtime_error("trailing tokens on edge line " + std::to_string(lineno));
    try {
      g.add_edge(static_cast<NodeId>(u), static_cast<NodeId>(v),
                 EdgeAttr{cost, delay});
    } catch (const std::exception& e) {
      throw std::runtime_error("edge line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (!have_n) throw std::runtime_error("edge list has no #nodes header");
  return g;
}

inline Graph load_edge_list(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_edge_list(is);
}

inline void write_group(std::ostream& os, const MulticastGroup& grp) {
  os << "sources:";
  for (NodeId s : grp.sources) os << " " << s;
  os << "\nreceivers:";
  for (NodeId d : grp.receivers) os << " " << d;
  os << "\n";
}

inline void save_group(const std::string& path, const MulticastGroup& grp) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot open for writing: " + path);
  write_group(os, grp);
  if (!os) throw std::runtime_error("write failed: " + path);
}

inline MulticastGroup read_group(std::istream& is) {
  MulticastGroup grp;
  bool have_sources = false, have_receivers = false;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line.substr(start));
    std::string tag;
    ls >> tag;
    std::vector<NodeId>* dest = nullptr;
    if (tag == "sources:") {
      dest = &grp.sources;
      have_sources = true;
    } else if (tag == "receivers:") {
      dest = &grp.receivers;
      have_receivers = true;
    } else {
      throw std::runtime_error("unexpected group line " + std::to_string(lineno) + ": " +
                               line);
    }
    long long v;
    while (ls >> v) {
      if (v < 0) throw std::runtime_error("negative node id in group file");
      dest->push_back(static_cast<NodeId>(v));
    }
  }
  if (!have_sources || !have_receivers)
    throw std::runtime_error("group file needs 'sources:' and 'receivers:' lines");
  return grp;
}

inline MulticastGroup load_group(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw std::runtime_error("cannot open: " + path);
  return read_group(is);
}

}  // namespace rpsel
