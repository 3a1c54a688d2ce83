#include "gern/linearize.hpp"

#include <algorithm>
#include <string>

#include "gern/error.hpp"

namespace gern {

PathGraph PathGraph::from_order(std::vector<NodeId> order) {
  const auto n = static_cast<NodeId>(order.size());
  PathGraph p;
  p.position_.assign(n, kNoNode);
  for (NodeId t = 0; t < n; ++t) {
    const NodeId v = order[t];
    if (v >= n || p.position_[v] != kNoNode) {
      throw Error(ErrorKind::InvalidArgument, "path order is not a permutation");
    }
    p.position_[v] = t;
  }
  p.order_ = std::move(order);
  return p;
}

Graph PathGraph::to_graph() const {
  std::vector<Edge> edges;
  edges.reserve(order_.size());
  for (std::size_t t = 1; t < order_.size(); ++t) edges.push_back({order_[t - 1], order_[t]});
  return Graph::from_edges(edges, node_count(), Connectivity::Require);
}

PathGraph dfs_linearize(const SpanningTree& tree, std::optional<NodeId> start, RngStream& rng) {
  const NodeId n = tree.node_count();
  if (n == 0) throw Error(ErrorKind::InvalidArgument, "empty tree");
  const NodeId origin = start ? *start : static_cast<NodeId>(rng.uniform_index(n));
  if (origin >= n) {
    throw Error(ErrorKind::InvalidStart, "start node " + std::to_string(origin) +
                                             " outside [0, " + std::to_string(n) + ")");
  }

  // Undirected tree adjacency in CSR form.
  std::vector<std::uint32_t> offsets(static_cast<std::size_t>(n) + 1, 0);
  for (const Edge& e : tree.edges()) {
    ++offsets[e.u + 1];
    ++offsets[e.v + 1];
  }
  for (NodeId i = 0; i < n; ++i) offsets[i + 1] += offsets[i];
  std::vector<NodeId> adjacency(offsets.back());
  std::vector<std::uint32_t> cursor(offsets.begin(), offsets.end() - 1);
  for (const Edge& e : tree.edges()) {
    adjacency[cursor[e.u]++] = e.v;
    adjacency[cursor[e.v]++] = e.u;
  }

  std::vector<NodeId> order;
  order.reserve(n);
  std::vector<char> visited(n, 0);
  std::vector<NodeId> stack{origin};
  visited[origin] = 1;
  while (!stack.empty()) {
    const NodeId u = stack.back();
    stack.pop_back();
    order.push_back(u);
    const std::size_t first = stack.size();
    for (std::uint32_t k = offsets[u]; k < offsets[u + 1]; ++k) {
      const NodeId w = adjacency[k];
      if (!visited[w]) {
        visited[w] = 1;
        stack.push_back(w);
      }
    }
    // In a tree every unvisited neighbor is a child; shuffling the freshly
    // pushed block randomizes the child visiting order.
    rng.shuffle(std::span<NodeId>(stack.data() + first, stack.size() - first));
  }
  return PathGraph::from_order(std::move(order));
}

std::size_t path_cutsize(const PathGraph& path, const Labels& y) {
  if (y.size() != path.node_count()) {
    throw Error(ErrorKind::LengthMismatch, "labels have length " + std::to_string(y.size()) +
                                               ", path has " +
                                               std::to_string(path.node_count()) + " nodes");
  }
  const auto order = path.order();
  std::size_t cut = 0;
  for (std::size_t t = 1; t < order.size(); ++t) cut += y[order[t - 1]] != y[order[t]] ? 1 : 0;
  return cut;
}

}  // namespace gern
