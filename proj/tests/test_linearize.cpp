#include <algorithm>
#include <random>

#include "doctest.h"
#include "gern/error.hpp"
#include "gern/linearize.hpp"
#include "gern/spanning.hpp"
#include "oracles.hpp"

using namespace gern;

namespace {

bool is_permutation_of_nodes(std::span<const NodeId> order, NodeId n) {
  std::vector<NodeId> sorted(order.begin(), order.end());
  std::sort(sorted.begin(), sorted.end());
  for (NodeId v = 0; v < n; ++v) {
    if (sorted.size() != n || sorted[v] != v) return false;
  }
  return true;
}

// Preorder check: every node after the first hangs (in the tree rooted at
// order[0]) below some node already on the DFS stack.
bool is_dfs_preorder(const Graph& tree, std::span<const NodeId> order) {
  std::vector<NodeId> stack{order[0]};
  std::vector<char> seen(tree.node_count(), 0);
  seen[order[0]] = 1;
  for (std::size_t k = 1; k < order.size(); ++k) {
    const NodeId v = order[k];
    while (!stack.empty() && !tree.find_edge(stack.back(), v)) {
      // The top may only be left once all its children are visited.
      for (NodeId w : tree.neighbors(stack.back())) {
        if (!seen[w]) return false;
      }
      stack.pop_back();
    }
    if (stack.empty()) return false;
    seen[v] = 1;
    stack.push_back(v);
  }
  return true;
}

}  // namespace

TEST_CASE("path tree from an end") {
  const Graph p3 = oracle::path(3);
  RngStream rng(1);
  const SpanningTree t = wilson(p3, rng);
  const PathGraph p = dfs_linearize(t, NodeId{0}, rng);
  CHECK(std::vector<NodeId>(p.order().begin(), p.order().end()) == std::vector<NodeId>{0, 1, 2});
}

TEST_CASE("star from its center") {
  const Graph s = oracle::star(3);
  RngStream rng(2);
  const SpanningTree t = wilson(s, rng);
  for (int i = 0; i < 20; ++i) {
    const PathGraph p = dfs_linearize(t, NodeId{0}, rng);
    CHECK(p.order()[0] == 0);
    CHECK(is_permutation_of_nodes(p.order(), 4));
    const Graph pg = p.to_graph();
    CHECK(pg.edge_count() == 3);
    for (std::size_t k = 0; k + 1 < 4; ++k) CHECK(pg.find_edge(p.order()[k], p.order()[k + 1]));
  }
}

TEST_CASE("invalid start") {
  RngStream rng(3);
  const SpanningTree t = wilson(oracle::path(4), rng);
  CHECK_THROWS_AS(dfs_linearize(t, NodeId{4}, rng), Error);
}

TEST_CASE("path_cutsize examples") {
  const PathGraph p = PathGraph::from_order({0, 1, 2, 3});
  CHECK(path_cutsize(p, Labels({0, 0, 1, 1}, 2)) == 1);
  CHECK(path_cutsize(p, Labels({1, 1, 1, 1}, 2)) == 0);
  CHECK_THROWS_AS(path_cutsize(p, Labels({0, 1}, 2)), Error);
  CHECK(p.position()[2] == 2);
}

TEST_CASE("clique chain: a tree that crosses only the bridges gives two stretches") {
  const Graph g = build_graph(oracle::clique_chain_edges(3, 3), 9);
  // The Hamiltonian path 0-1-...-8 uses exactly the bridges (2,3) and (5,6).
  std::vector<NodeId> parent(9, kNoNode);
  for (NodeId v = 1; v < 9; ++v) parent[v] = v - 1;
  const SpanningTree t = SpanningTree::from_parents(g, 0, parent);
  RngStream rng(4);
  const PathGraph p = dfs_linearize(t, NodeId{0}, rng);
  CHECK(path_cutsize(p, oracle::block_labels(3, 3)) == 2);
}

TEST_CASE("depth-first preorder and the cut-size doubling bound hold on every draw") {
  std::mt19937_64 gen(21);
  RngStream rng(21);
  for (int round = 0; round < 600; ++round) {
    const NodeId n = 5 + static_cast<NodeId>(gen() % 40);
    const Graph g = oracle::random_connected(n, gen() % (3 * n), gen());
    std::vector<std::int32_t> y(n);
    const auto classes = static_cast<std::int32_t>(2 + gen() % 3);
    for (auto& v : y) v = static_cast<std::int32_t>(gen() % classes);
    const Labels labels(y, classes);
    const SpanningTree t = generate_tree(g, {TreeGenerator::Wilson, 0.5}, rng);
    const PathGraph p = dfs_linearize(t, std::nullopt, rng);
    REQUIRE(is_permutation_of_nodes(p.order(), n));
    CHECK(is_dfs_preorder(t.as_graph(), p.order()));
    CHECK(path_cutsize(p, labels) <= 2 * cutsize(t.as_graph(), labels));
    for (NodeId k = 0; k < n; ++k) CHECK(p.position()[p.order()[k]] == k);
  }
}
