#include "gern/graph.hpp"

#include <algorithm>
#include <numeric>
#include <string>

#include "gern/error.hpp"

namespace gern {

Graph Graph::from_edges(std::span<const Edge> edges, NodeId n, Connectivity connectivity,
                        BuildReport* report) {
  BuildReport local_report;
  std::vector<Edge> canon;
  canon.reserve(edges.size());
  for (const Edge& e : edges) {
    if (e.u >= n || e.v >= n) {
      throw Error(ErrorKind::InvalidIndex, "edge (" + std::to_string(e.u) + ", " +
                                               std::to_string(e.v) + ") outside [0, " +
                                               std::to_string(n) + ")");
    }
    if (e.u == e.v) {
      ++local_report.self_loops_dropped;
      continue;
    }
    canon.push_back(e.u < e.v ? e : Edge{e.v, e.u});
  }
  std::sort(canon.begin(), canon.end());
  const auto unique_end = std::unique(canon.begin(), canon.end());
  local_report.duplicates_dropped = static_cast<std::size_t>(canon.end() - unique_end);
  canon.erase(unique_end, canon.end());

  Graph g;
  g.node_count_ = n;
  g.edges_ = std::move(canon);
  g.offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  for (const Edge& e : g.edges_) {
    ++g.offsets_[e.u + 1];
    ++g.offsets_[e.v + 1];
  }
  std::partial_sum(g.offsets_.begin(), g.offsets_.end(), g.offsets_.begin());
  g.adjacency_.resize(2 * g.edges_.size());
  g.adjacency_edge_.resize(2 * g.edges_.size());
  std::vector<std::uint32_t> cursor(g.offsets_.begin(), g.offsets_.end() - 1);
  // Edges are sorted by (u, v), so filling in edge order leaves every
  // neighbor list ascending: for node x, neighbors w < x arrive first (as
  // the u side of (w, x), ordered by w), then w > x (ordered by w).
  for (EdgeId id = 0; id < g.edges_.size(); ++id) {
    const Edge& e = g.edges_[id];
    g.adjacency_[cursor[e.v]] = e.u;
    g.adjacency_edge_[cursor[e.v]++] = id;
  }
  for (EdgeId id = 0; id < g.edges_.size(); ++id) {
    const Edge& e = g.edges_[id];
    g.adjacency_[cursor[e.u]] = e.v;
    g.adjacency_edge_[cursor[e.u]++] = id;
  }

  if (connectivity == Connectivity::Require) {
    const std::size_t components = g.component_count();
    if (components > 1) {
      throw Error(ErrorKind::DisconnectedGraph,
                  "graph has " + std::to_string(components) + " connected components");
    }
  }
  if (report != nullptr) *report = local_report;
  return g;
}

std::optional<EdgeId> Graph::find_edge(NodeId a, NodeId b) const noexcept {
  if (a >= node_count_ || b >= node_count_) return std::nullopt;
  if (degree(a) > degree(b)) std::swap(a, b);
  const auto nbrs = neighbors(a);
  const auto it = std::lower_bound(nbrs.begin(), nbrs.end(), b);
  if (it == nbrs.end() || *it != b) return std::nullopt;
  return incident_edges(a)[static_cast<std::size_t>(it - nbrs.begin())];
}

std::size_t Graph::component_count() const {
  std::vector<char> seen(node_count_, 0);
  std::vector<NodeId> stack;
  std::size_t components = 0;
  for (NodeId s = 0; s < node_count_; ++s) {
    if (seen[s]) continue;
    ++components;
    seen[s] = 1;
    stack.push_back(s);
    while (!stack.empty()) {
      const NodeId u = stack.back();
      stack.pop_back();
      for (NodeId w : neighbors(u)) {
        if (!seen[w]) {
          seen[w] = 1;
          stack.push_back(w);
        }
      }
    }
  }
  return components;
}

Graph build_graph(std::span<const Edge> edges, NodeId n, BuildReport* report) {
  return Graph::from_edges(edges, n, Connectivity::Require, report);
}

Labels::Labels(std::vector<std::int32_t> values, std::int32_t class_count)
    : values_(std::move(values)), class_count_(class_count) {
  if (class_count_ < 2) {
    throw Error(ErrorKind::InvalidArgument, "class count must be at least 2");
  }
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (values_[i] < 0 || values_[i] >= class_count_) {
      throw Error(ErrorKind::InvalidArgument, "label " + std::to_string(values_[i]) +
                                                  " of node " + std::to_string(i) +
                                                  " outside [0, " +
                                                  std::to_string(class_count_) + ")");
    }
  }
}

void Split::validate(NodeId n) const {
  if (train.empty()) throw Error(ErrorKind::InvalidArgument, "training set is empty");
  std::vector<char> owner(n, 0);
  auto mark = [&](const std::vector<NodeId>& nodes, char tag, const char* name) {
    for (NodeId v : nodes) {
      if (v >= n) {
        throw Error(ErrorKind::InvalidIndex,
                    std::string(name) + " node " + std::to_string(v) + " out of range");
      }
      if (owner[v] != 0) {
        throw Error(ErrorKind::InvalidArgument,
                    "node " + std::to_string(v) + " appears in more than one split set");
      }
      owner[v] = tag;
    }
  };
  mark(train, 1, "train");
  mark(validation, 2, "validation");
  mark(test, 3, "test");
}

std::size_t cutsize(const Graph& g, const Labels& y) {
  if (y.size() != g.node_count()) {
    throw Error(ErrorKind::LengthMismatch, "labels have length " + std::to_string(y.size()) +
                                               ", graph has " +
                                               std::to_string(g.node_count()) + " nodes");
  }
  std::size_t cut = 0;
  for (const Edge& e : g.edges()) cut += y[e.u] != y[e.v] ? 1 : 0;
  return cut;
}

std::vector<NodeId> bfs_distances(const Graph& g, std::span<const NodeId> seeds,
                                  std::uint32_t max_hops) {
  std::vector<NodeId> dist(g.node_count(), kNoNode);
  std::vector<NodeId> frontier;
  for (NodeId s : seeds) {
    if (s >= g.node_count()) {
      throw Error(ErrorKind::InvalidIndex, "seed " + std::to_string(s) + " out of range");
    }
    if (dist[s] == kNoNode) {
      dist[s] = 0;
      frontier.push_back(s);
    }
  }
  std::vector<NodeId> next;
  for (std::uint32_t depth = 0; depth < max_hops && !frontier.empty(); ++depth) {
    next.clear();
    for (NodeId u : frontier) {
      for (NodeId w : g.neighbors(u)) {
        if (dist[w] == kNoNode) {
          dist[w] = depth + 1;
          next.push_back(w);
        }
      }
    }
    frontier.swap(next);
  }
  return dist;
}

Neighborhood k_hop_neighborhood(const Graph& g, std::span<const NodeId> seeds,
                                std::uint32_t hops) {
  const std::vector<NodeId> dist = bfs_distances(g, seeds, hops);
  Neighborhood nb;
  nb.local_of.assign(g.node_count(), kNoNode);
  for (NodeId v = 0; v < g.node_count(); ++v) {
    if (dist[v] != kNoNode) {
      nb.local_of[v] = static_cast<NodeId>(nb.nodes.size());
      nb.nodes.push_back(v);
    }
  }
  std::vector<Edge> local_edges;
  for (NodeId local = 0; local < nb.nodes.size(); ++local) {
    for (NodeId w : g.neighbors(nb.nodes[local])) {
      const NodeId lw = nb.local_of[w];
      if (lw != kNoNode && local < lw) local_edges.push_back({local, lw});
    }
  }
  nb.induced = Graph::from_edges(local_edges, static_cast<NodeId>(nb.nodes.size()),
                                 Connectivity::Allow);
  return nb;
}

}  // namespace gern
