// graph.hpp - directed weighted graph plus delay-optimal path queries.
//
// Nodes are dense integer ids in [0, node_count). Every edge carries an
// abstract (cost, delay) pair; both are non-negative finite doubles. At most
// one edge exists per ordered pair and self loops are rejected, so adjacency
// rows stay sorted by target id and lookups are binary searches.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <queue>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rpsel {

using NodeId = std::uint32_t;

constexpr double kInfDelay = std::numeric_limits<double>::infinity();

struct EdgeAttr {
  double cost = 0.0;
  double delay = 0.0;
};

// A concrete node sequence with its accumulated edge sums. A single-node
// path is valid and has zero cost and delay.
struct Path {
  std::vector<NodeId> nodes;
  double total_cost = 0.0;
  double total_delay = 0.0;

  bool trivial() const { return nodes.size() <= 1; }
  NodeId front() const { return nodes.front(); }
  NodeId back() const { return nodes.back(); }
};

class Graph {
 public:
  struct OutEdge {
    NodeId to;
    EdgeAttr attr;
  };

  Graph() = default;
  explicit Graph(NodeId node_count) : adj_(node_count) {}

  NodeId node_count() const { return static_cast<NodeId>(adj_.size()); }
  std::size_t edge_count() const { return edge_count_; }

  void check_node(NodeId u) const {
    if (u >= node_count())
      throw std::out_of_range("node id " + std::to_string(u) + " out of range");
  }

  void add_edge(NodeId u, NodeId v, EdgeAttr attr) {
    check_node(u);
    check_node(v);
    if (u == v) throw std::invalid_argument("self loops are not allowed");
    if (!(attr.cost >= 0.0) || !std::isfinite(attr.cost) ||
        !(attr.delay >= 0.0) || !std::isfinite(attr.delay))
      throw std::invalid_argument("edge attributes must be finite and non-negative");
    auto& row = adj_[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const OutEdge& e, NodeId t) { return e.to < t; });
    if (it != row.end() && it->to == v)
      throw std::invalid_argument("duplicate edge " + std::to_string(u) + "->" +
                                  std::to_string(v));
    row.insert(it, OutEdge{v, attr});
    ++edge_count_;
  }

  // Symmetric-construction helper: inserts u->v and v->u in one call.
  void add_link(NodeId u, NodeId v, EdgeAttr forward, EdgeAttr reverse) {
    add_edge(u, v, forward);
    add_edge(v, u, reverse);
  }
  void add_link(NodeId u, NodeId v, EdgeAttr both) { add_link(u, v, both, both); }

  // Returns false when the edge was absent.
  bool remove_edge(NodeId u, NodeId v) {
    check_node(u);
    check_node(v);
    auto& row = adj_[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const OutEdge& e, NodeId t) { return e.to < t; });
    if (it == row.end() || it->to != v) return false;
    row.erase(it);
    --edge_count_;
    return true;
  }

  // nullptr when absent.
  const EdgeAttr* edge(NodeId u, NodeId v) const {
    check_node(u);
    check_node(v);
    const auto& row = adj_[u];
    auto it = std::lower_bound(row.begin(), row.end(), v,
                               [](const OutEdge& e, NodeId t) { return e.to < t; });
    if (it == row.end() || it->to != v) return nullptr;
    return &it->attr;
  }

  bool has_edge(NodeId u, NodeId v) const { return edge(u, v) != nullptr; }

  std::span<const OutEdge> out_edges(NodeId u) const {
    check_node(u);
    return adj_[u];
  }

 private:
  std::vector<std::vector<OutEdge>> adj_;
  std::size_t edge_count_ = 0;
};

namespace detail {

// Label-setting search minimizing (total_delay, total_cost, node sequence),
// the sequence compared lexicographically. The composite key never decreases
// along an edge extension (delay/cost sums grow or stay put, and appending to
// a sequence makes it lexicographically larger), so the usual Dijkstra
// argument applies to the full triple and the first pop per node is final.
// Comparisons are exact; no tolerance is applied here, because a fuzzy
// comparator would not be a strict weak ordering inside the heap.
struct PathLabel {
  double delay = 0.0;
  double cost = 0.0;
  std::vector<NodeId> nodes;
};

struct PathLabelWorse {
  bool operator()(const PathLabel& a, const PathLabel& b) const {
    if (a.delay != b.delay) return a.delay > b.delay;
    if (a.cost != b.cost) return a.cost > b.cost;
    return a.nodes > b.nodes;
  }
};

// Runs the search from src until `until` (or to exhaustion when until is
// node_count), recording the final label of every settled node.
inline std::vector<std::optional<PathLabel>> delay_dijkstra(const Graph& g, NodeId src,
                                                            NodeId until) {
  std::vector<std::optional<PathLabel>> settled(g.node_count());
  std::priority_queue<PathLabel, std::vector<PathLabel>, PathLabelWorse> pq;
  pq.push(PathLabel{0.0, 0.0, {src}});
  while (!pq.empty()) {
    PathLabel top = pq.top();
    pq.pop();
    NodeId u = top.nodes.back();
    if (settled[u]) continue;
    settled[u] = std::move(top);
    if (u == until) break;
    const PathLabel& lab = *settled[u];
    for (const auto& e : g.out_edges(u)) {
      if (settled[e.to]) continue;
      PathLabel next{lab.delay + e.attr.delay, lab.cost + e.attr.cost, lab.nodes};
      next.nodes.push_back(e.to);
      pq.push(std::move(next));
    }
  }
  return settled;
}

inline Path to_path(PathLabel&& lab) {
  return Path{std::move(lab.nodes), lab.cost, lab.delay};
}

}  // namespace detail

// Minimum-delay path from src to dst, ties broken by lower cost and then by
// lexicographically smallest node sequence. nullopt when dst is unreachable.
inline std::optional<Path> shortest_delay_path(const Graph& g, NodeId src, NodeId dst) {
  g.check_node(src);
  g.check_node(dst);
  auto settled = detail::delay_dijkstra(g, src, dst);
  if (!settled[dst]) return std::nullopt;
  return detail::to_path(std::move(*settled[dst]));
}

// Same preference rule as shortest_delay_path, for every destination at once.
// Entry [v] is nullopt when v is unreachable from src.
inline std::vector<std::optional<Path>> shortest_delay_paths_from(const Graph& g,
                                                                  NodeId src) {
  g.check_node(src);
  auto settled = detail::delay_dijkstra(g, src, g.node_count());
  std::vector<std::optional<Path>> out(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v)
    if (settled[v]) out[v] = detail::to_path(std::move(*settled[v]));
  return out;
}

struct DelayTableEntry {
  double delay = kInfDelay;             // infinity marks unreachable
  std::optional<NodeId> predecessor;    // unset for src and unreachable nodes
};

// One-to-all minimum delays with predecessors, consistent with
// shortest_delay_path: table[v].delay equals the per-pair query's total_delay
// bit for bit, and the predecessor chain reproduces its node sequence.
inline std::vector<DelayTableEntry> delay_table_from(const Graph& g, NodeId src) {
  g.check_node(src);
  auto settled = detail::delay_dijkstra(g, src, g.node_count());
  std::vector<DelayTableEntry> table(g.node_count());
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (!settled[v]) continue;
    table[v].delay = settled[v]->delay;
    const auto& nodes = settled[v]->nodes;
    if (nodes.size() >= 2) table[v].predecessor = nodes[nodes.size() - 2];
  }
  return table;
}

}  // namespace rpsel
