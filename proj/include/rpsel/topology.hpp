// topology.hpp - random topology generation and instance carving.
//
// Networks are produced with the classic Waxman construction: n nodes placed
// uniformly in the unit square; each unordered pair {u,v} becomes a
// bidirectional link with probability alpha * exp(-d(u,v) / (beta * L)),
// where L is the maximum pairwise Euclidean distance of the drawn placement.
// Link cost and delay are drawn uniformly from configurable ranges,
// independently per direction unless symmetric_weights is set.

#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <stdexcept>
#include <vector>

#include "rpsel/graph.hpp"
#include "rpsel/metrics.hpp"
#include "rpsel/rng.hpp"

namespace rpsel {

struct ValueRange {
  double lo = 1.0;
  double hi = 10.0;
};

struct WaxmanParams {
  NodeId n = 0;
  double alpha = 0.2;
  double beta = 0.2;
  std::uint64_t seed = 0;
  ValueRange cost_range{1.0, 10.0};
  ValueRange delay_range{1.0, 10.0};
  bool symmetric_weights = false;  // reverse direction copies the forward draw
};

struct GeneratedTopology {
  Graph graph;
  std::vector<std::array<double, 2>> coords;  // unit-square node positions
};

inline void validate_params(const WaxmanParams& p) {
  if (p.n < 1) throw std::invalid_argument("waxman: n must be >= 1");
  if (!(p.alpha > 0.0) || p.alpha > 1.0)
    throw std::invalid_argument("waxman: alpha must be in (0, 1]");
  if (!(p.beta > 0.0)) throw std::invalid_argument("waxman: beta must be > 0");
  auto check_range = [](const ValueRange& r, const char* what) {
    if (!(r.lo >= 0.0) || !(r.hi >= r.lo) || !std::isfinite(r.hi))
      throw std::invalid_argument(std::string("waxman: bad ") + what + " range");
  };
  check_range(p.cost_range, "cost");
  check_range(p.delay_range, "delay");
}

// Pure function of params (in particular of the seed). Draw order: all node
// positions first, then one acceptance draw per unordered pair in (u, v)
// ascending order, with the attribute draws immediately after each accept.
inline GeneratedTopology waxman_generate(const WaxmanParams& p) {
  validate_params(p);
  Rng rng(mix_seed(p.seed, 0x77617861ull));  // distinct stream per purpose
  GeneratedTopology out;
  out.graph = Graph(p.n);
  out.coords.resize(p.n);
  for (NodeId v = 0; v < p.n; ++v) out.coords[v] = {rng.uniform(), rng.uniform()};

  double max_dist = 0.0;
  auto dist = [&](NodeId a, NodeId b) {
    double dx = out.coords[a][0] - out.coords[b][0];
    double dy = out.coords[a][1] - out.coords[b][1];
    return std::sqrt(dx * dx + dy * dy);
  };
  for (NodeId u = 0; u < p.n; ++u)
    for (NodeId v = u + 1; v < p.n; ++v) max_dist = std::max(max_dist, dist(u, v));
  if (max_dist <= 0.0) max_dist = 1.0;  // coincident points; probability -> alpha

  for (NodeId u = 0; u < p.n; ++u)
    for (NodeId v = u + 1; v < p.n; ++v) {
      double prob = p.alpha * std::exp(-dist(u, v) / (p.beta * max_dist));
      if (rng.uniform() >= prob) continue;
      EdgeAttr fw{rng.uniform(p.cost_range.lo, p.cost_range.hi),
                  rng.uniform(p.delay_range.lo, p.delay_range.hi)};
      EdgeAttr bw = fw;
      if (!p.symmetric_weights) {
        bw.cost = rng.uniform(p.cost_range.lo, p.cost_range.hi);
        bw.delay = rng.uniform(p.delay_range.lo, p.delay_range.hi);
      }
      out.graph.add_link(u, v, fw, bw);
    }
  return out;
}

struct ComponentResult {
  Graph graph;                         // renumbered to [0, size)
  std::vector<NodeId> to_original;     // new id -> original id, ascending
  std::vector<std::optional<NodeId>> from_original;  // original id -> new id
};

// Extracts the largest connected component of the undirected support (u and v
// are adjacent when an edge exists in either direction). Ties go to the
// component containing the smallest original node id. Kept nodes are
// renumbered preserving their relative order; all edges among them survive
// with attributes intact.
inline ComponentResult largest_connected_component(const Graph& g) {
  NodeId n = g.node_count();
  std::vector<std::vector<NodeId>> undirected(n);
  for (NodeId u = 0; u < n; ++u)
    for (const auto& e : g.out_edges(u)) {
      undirected[u].push_back(e.to);
      undirected[e.to].push_back(u);
    }
  std::vector<int> comp(n, -1);
  int comp_count = 0;
  std::vector<std::size_t> comp_size;
  std::vector<NodeId> stack;
  for (NodeId start = 0; start < n; ++start) {
    if (comp[start] != -1) continue;
    int c = comp_count++;
    comp_size.push_back(0);
    stack.push_back(start);
    comp[start] = c;
    while (!stack.empty()) {
      NodeId u = stack.back();
      stack.pop_back();
      ++comp_size[c];
      for (NodeId v : undirected[u])
        if (comp[v] == -1) {
          comp[v] = c;
          stack.push_back(v);
        }
    }
  }
  // Components are discovered in order of their smallest member, so the first
  // component attaining the maximum size wins ties by lowest original id.
  int best = 0;
  for (int c = 1; c < comp_count; ++c)
    if (comp_size[c] > comp_size[best]) best = c;

  ComponentResult res;
  res.from_original.resize(n);
  for (NodeId v = 0; v < n; ++v)
    if (comp[v] == best) {
      res.from_original[v] = static_cast<NodeId>(res.to_original.size());
      res.to_original.push_back(v);
    }
  res.graph = Graph(static_cast<NodeId>(res.to_original.size()));
  for (NodeId u = 0; u < n; ++u) {
    if (comp[u] != best) continue;
    for (const auto& e : g.out_edges(u))
      res.graph.add_edge(*res.from_original[u], *res.from_original[e.to], e.attr);
  }
  return res;
}

// Samples ceil(fraction * node_count) distinct receivers and n_sources
// distinct sources (the two sets may overlap). Pure function of the seed;
// receivers are drawn first, then sources, from one stream.
inline MulticastGroup sample_group(const Graph& g, double fraction,
                                   std::uint32_t n_sources, std::uint64_t seed) {
  NodeId n = g.node_count();
  if (n == 0) throw std::invalid_argument("sample_group: empty graph");
  if (!(fraction > 0.0) || fraction > 1.0)
    throw std::invalid_argument("sample_group: fraction must be in (0, 1]");
  if (n_sources < 1 || n_sources > n)
    throw std::invalid_argument("sample_group: n_sources must be in [1, node_count]");
  auto n_receivers = static_cast<NodeId>(std::ceil(fraction * static_cast<double>(n)));

  Rng rng(mix_seed(seed, 0x67726f75ull));
  auto draw = [&](NodeId count) {
    std::vector<NodeId> pool(n);
    for (NodeId v = 0; v < n; ++v) pool[v] = v;
    std::vector<NodeId> picked;
    picked.reserve(count);
    for (NodeId i = 0; i < count; ++i) {
      std::size_t j = i + rng.uniform_index(pool.size() - i);
      std::swap(pool[i], pool[j]);
      picked.push_back(pool[i]);
    }
    std::sort(picked.begin(), picked.end());
    return picked;
  };
  MulticastGroup grp;
  grp.receivers = draw(n_receivers);
  grp.sources = draw(n_sources);
  return grp;
}

}  // namespace rpsel
