#include <cmath>
#include <numeric>

#include "doctest.h"
#include "gern/resistance.hpp"
#include "gern/wta.hpp"
#include "oracles.hpp"

using namespace gern;

TEST_CASE("hand-simulated game") {
  const PathGraph p = PathGraph::from_order({0, 1, 2, 3});
  const Labels y({0, 0, 1, 1}, 2);
  const std::vector<NodeId> order{0, 1, 2, 3};
  const auto game = wta_play(p, y, order, 0);
  CHECK(game.total_mistakes == 1);
  CHECK(game.mistakes == std::vector<char>{0, 0, 1, 0});
  CHECK(game.predictions == std::vector<std::int32_t>{0, 0, 0, 1});
}

TEST_CASE("uniform labels with matching default") {
  const PathGraph p = PathGraph::from_order({3, 1, 0, 2, 4});
  const Labels y({1, 1, 1, 1, 1}, 2);
  const std::vector<NodeId> order{4, 0, 2, 1, 3};
  CHECK(wta_play(p, y, order, 1).total_mistakes == 0);
}

TEST_CASE("alternating labels left to right") {
  const NodeId n = 10;
  std::vector<NodeId> ids(n);
  std::iota(ids.begin(), ids.end(), NodeId{0});
  std::vector<std::int32_t> y(n);
  for (NodeId v = 0; v < n; ++v) y[v] = static_cast<std::int32_t>(v % 2);
  const auto game = wta_play(PathGraph::from_order(ids), Labels(y, 2), ids, 1);
  CHECK(game.total_mistakes == n);  // default wrong, then every copy wrong
  CHECK(wta_play(PathGraph::from_order(ids), Labels(y, 2), ids, 0).total_mistakes == n - 1);
}

TEST_CASE("ties go to the earlier revealed node") {
  const PathGraph p = PathGraph::from_order({0, 1, 2});
  const Labels y({0, 1, 1}, 2);
  // Reveal 2 then 0, then predict 1 (distance 1 to both): node 2 was first.
  const std::vector<NodeId> order{2, 0, 1};
  const auto game = wta_play(p, y, order, 1);
  CHECK(game.predictions[2] == 1);
  const std::vector<NodeId> order2{0, 2, 1};
  CHECK(wta_play(p, y, order2, 0).predictions[2] == 0);
}

TEST_CASE("mistakes are invariant under class relabeling and bounded by n") {
  std::mt19937_64 gen(3);
  for (int round = 0; round < 100; ++round) {
    const NodeId n = 3 + static_cast<NodeId>(gen() % 30);
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), NodeId{0});
    std::shuffle(ids.begin(), ids.end(), gen);
    const PathGraph p = PathGraph::from_order(ids);
    std::vector<std::int32_t> y(n);
    for (auto& v : y) v = static_cast<std::int32_t>(gen() % 3);
    std::vector<std::int32_t> swapped(n);
    const std::int32_t perm[] = {2, 0, 1};
    for (NodeId v = 0; v < n; ++v) swapped[v] = perm[y[v]];
    std::shuffle(ids.begin(), ids.end(), gen);
    const auto a = wta_play(p, Labels(y, 3), ids, 1);
    const auto b = wta_play(p, Labels(swapped, 3), ids, perm[1]);
    CHECK(a.total_mistakes == b.total_mistakes);
    CHECK(a.total_mistakes <= n);
  }
}

TEST_CASE("expected mistakes on homophilic graphs") {
  const Graph chain = build_graph(oracle::clique_chain_edges(3, 3), 9);
  const auto uniform = wta_expected_mistakes(chain, Labels(std::vector<std::int32_t>(9, 0), 2), 200,
                                             OrderMode::Random, RngStream(1));
  CHECK(uniform.mean == 0.0);
  const auto summary =
      wta_expected_mistakes(chain, oracle::block_labels(3, 3), 1000, OrderMode::Random, RngStream(2));
  CHECK(summary.per_trial.size() == 1000);
  CHECK(summary.mean <= 2.0 * 2.0 * std::log(9.0) + 1.0);
}

TEST_CASE("doubling the bridges of a caveman graph raises the mistake count") {
  auto caveman = [](bool doubled) {
    auto edges = oracle::clique_chain_edges(10, 10);
    if (doubled) {
      for (NodeId c = 0; c + 1 < 10; ++c) edges.push_back({c * 10, c * 10 + 11});
    }
    return build_graph(edges, 100);
  };
  const Labels y = oracle::block_labels(10, 10);
  const Graph single = caveman(false);
  const Graph doubled = caveman(true);
  const double phi_single = oracle::weighted_cut(single, y);
  const double phi_doubled = oracle::weighted_cut(doubled, y);
  REQUIRE(phi_doubled > phi_single);
  const auto a = wta_expected_mistakes(single, y, 1000, OrderMode::Random, RngStream(5));
  const auto b = wta_expected_mistakes(doubled, y, 1000, OrderMode::Random, RngStream(6));
  CHECK(b.mean > a.mean);
}
