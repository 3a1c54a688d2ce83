#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace gern {

using NodeId = std::uint32_t;
using EdgeId = std::uint32_t;

inline constexpr NodeId kNoNode = static_cast<NodeId>(-1);

struct Edge {
  NodeId u;
  NodeId v;
  friend bool operator==(const Edge&, const Edge&) = default;
  friend auto operator<=>(const Edge&, const Edge&) = default;
};

/// Counts of input pairs discarded while canonicalizing an edge list.
struct BuildReport {
  std::size_t self_loops_dropped = 0;
  std::size_t duplicates_dropped = 0;
};

enum class Connectivity { Require, Allow };

/// Immutable simple undirected graph in compressed adjacency form.
///
/// Neighbor lists are sorted ascending. Each undirected edge (u < v) has a
/// canonical id; edges are ordered lexicographically by (u, v), and every
/// adjacency slot records the id of the edge it belongs to.
class Graph {
 public:
  Graph() = default;

  /// Builds from arbitrary pairs: duplicates (either direction) and
  /// self-loops are dropped. Throws InvalidIndex for endpoints >= n, and
  /// DisconnectedGraph when `connectivity` is Require and the result is not
  /// connected.
  static Graph from_edges(std::span<const Edge> edges, NodeId n,
                          Connectivity connectivity = Connectivity::Require,
                          BuildReport* report = nullptr);

  NodeId node_count() const noexcept { return node_count_; }
  EdgeId edge_count() const noexcept { return static_cast<EdgeId>(edges_.size()); }

  std::uint32_t degree(NodeId i) const noexcept { return offsets_[i + 1] - offsets_[i]; }

  std::span<const NodeId> neighbors(NodeId i) const noexcept {
    return {adjacency_.data() + offsets_[i], degree(i)};
  }
  /// Edge id for each entry of neighbors(i).
  std::span<const EdgeId> incident_edges(NodeId i) const noexcept {
    return {adjacency_edge_.data() + offsets_[i], degree(i)};
  }

  std::span<const Edge> edges() const noexcept { return edges_; }
  const Edge& edge(EdgeId e) const noexcept { return edges_[e]; }
  std::optional<EdgeId> find_edge(NodeId a, NodeId b) const noexcept;

  std::span<const std::uint32_t> offsets() const noexcept { return offsets_; }
  std::span<const NodeId> adjacency() const noexcept { return adjacency_; }

  std::size_t component_count() const;
  bool is_connected() const { return component_count() <= 1; }

 private:
  NodeId node_count_ = 0;
  std::vector<std::uint32_t> offsets_{0};
  std::vector<NodeId> adjacency_;
  std::vector<EdgeId> adjacency_edge_;
  std::vector<Edge> edges_;
};

/// Connected simple graph from a raw pair list; see Graph::from_edges.
Graph build_graph(std::span<const Edge> edges, NodeId n, BuildReport* report = nullptr);

/// Class labels y_i in [0, class_count).
class Labels {
 public:
  Labels() = default;
  /// Throws InvalidArgument when class_count < 2 or a value is out of range.
  Labels(std::vector<std::int32_t> values, std::int32_t class_count);

  std::size_t size() const noexcept { return values_.size(); }
  std::int32_t class_count() const noexcept { return class_count_; }
  std::int32_t operator[](std::size_t i) const noexcept { return values_[i]; }
  std::span<const std::int32_t> values() const noexcept { return values_; }

 private:
  std::vector<std::int32_t> values_;
  std::int32_t class_count_ = 0;
};

struct Split {
  std::vector<NodeId> train;
  std::vector<NodeId> validation;
  std::vector<NodeId> test;

  /// Throws InvalidArgument unless the sets are disjoint, inside [0, n) and
  /// train is non-empty.
  void validate(NodeId n) const;
};

/// Number of edges whose endpoints carry different labels.
std::size_t cutsize(const Graph& g, const Labels& y);

struct Neighborhood {
  std::vector<NodeId> nodes;          // local id -> original id, ascending
  std::vector<NodeId> local_of;       // original id -> local id or kNoNode
  Graph induced;                      // on local ids; may be disconnected

  NodeId to_local(NodeId original) const noexcept { return local_of[original]; }
};

/// All nodes within `hops` of any seed, and the subgraph they induce.
Neighborhood k_hop_neighborhood(const Graph& g, std::span<const NodeId> seeds, std::uint32_t hops);

/// Breadth-first distances from the seed set (kNoNode when unreachable
/// within `max_hops`).
std::vector<NodeId> bfs_distances(const Graph& g, std::span<const NodeId> seeds,
                                  std::uint32_t max_hops = kNoNode);

}  // namespace gern
