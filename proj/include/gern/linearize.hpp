#pragma once

#include <optional>
#include <span>
#include <vector>

#include "gern/graph.hpp"
#include "gern/rng.hpp"
#include "gern/spanning.hpp"

namespace gern {

/// A node permutation read as a path: order[t] is the t-th node, and
/// consecutive entries are joined by the n-1 path edges.
class PathGraph {
 public:
  /// Throws InvalidArgument unless `order` is a permutation of [0, n).
  static PathGraph from_order(std::vector<NodeId> order);

  NodeId node_count() const noexcept { return static_cast<NodeId>(order_.size()); }
  std::span<const NodeId> order() const noexcept { return order_; }
  /// position()[v] is the index of v in order().
  std::span<const NodeId> position() const noexcept { return position_; }

  /// The path as a graph on the original node ids.
  Graph to_graph() const;

 private:
  std::vector<NodeId> order_;
  std::vector<NodeId> position_;
};

/// Depth-first preorder of `tree` from `start` (uniform random when empty),
/// visiting each node's children in shuffled order. Iterative.
PathGraph dfs_linearize(const SpanningTree& tree, std::optional<NodeId> start, RngStream& rng);

/// Consecutive pairs along the path whose labels differ.
std::size_t path_cutsize(const PathGraph& path, const Labels& y);

}  // namespace gern
