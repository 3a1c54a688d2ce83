#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gern/graph.hpp"
#include "gern/rng.hpp"

namespace gern {

/// A spanning tree of a source graph, rooted at `root()`.
///
/// parent[root] == kNoNode; every other node points one step toward the
/// root. Construction validates n-1 edges, edge membership in the source
/// graph and spanning (union-find).
class SpanningTree {
 public:
  static SpanningTree from_parents(const Graph& g, NodeId root, std::vector<NodeId> parent);

  NodeId node_count() const noexcept { return static_cast<NodeId>(parent_.size()); }
  NodeId root() const noexcept { return root_; }
  std::span<const NodeId> parent() const noexcept { return parent_; }
  /// Canonical (u < v) tree edges, ascending by source-graph edge id.
  std::span<const Edge> edges() const noexcept { return edges_; }
  /// Source-graph edge ids of the tree edges, ascending.
  std::span<const EdgeId> edge_ids() const noexcept { return edge_ids_; }

  Graph as_graph() const;

 private:
  NodeId root_ = kNoNode;
  std::vector<NodeId> parent_;
  std::vector<Edge> edges_;
  std::vector<EdgeId> edge_ids_;
};

enum class TreeGenerator { Wilson, AldousBroder, ARst, RandomBfs };

std::string_view to_string(TreeGenerator generator) noexcept;
/// Accepts "wilson", "aldous-broder", "a-rst", "bfs"; throws InvalidArgument.
TreeGenerator parse_tree_generator(std::string_view name);

struct GeneratorSpec {
  TreeGenerator kind = TreeGenerator::Wilson;
  double beta = 0.5;  // A-RST only
};

/// Walk-step ceiling used as a bug canary: 10^4 * n * ln(n + 1).
std::uint64_t walk_step_cap(NodeId n);

/// Random-walk (first-entrance) tree; uniform over spanning trees.
SpanningTree aldous_broder(const Graph& g, RngStream& rng);
/// Loop-erased random-walk tree; uniform over spanning trees.
SpanningTree wilson(const Graph& g, RngStream& rng);
/// Hybrid: floor(beta * n) random-walk steps, then Wilson on the nodes the
/// walk did not reach.
SpanningTree a_rst(const Graph& g, double beta, RngStream& rng);
/// BFS tree from a uniform root with shuffled neighbor order. Not uniform.
SpanningTree random_bfs_tree(const Graph& g, RngStream& rng);

SpanningTree generate_tree(const Graph& g, const GeneratorSpec& spec, RngStream& rng);

/// Per-edge inclusion counts over repeated tree draws.
struct EdgeFrequencyTable {
  std::vector<Edge> edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t trials = 0;

  double frequency(EdgeId e) const { return static_cast<double>(counts[e]) / trials; }
  double standard_error(EdgeId e) const;
  std::vector<double> frequencies() const;
  /// Adds another tally over the same edge set (EdgeSetMismatch otherwise).
  void merge(const EdgeFrequencyTable& other);
};

/// Trials are split into fixed-size chunks, chunk c drawing from
/// rng.derive(c); the result does not depend on the thread count.
EdgeFrequencyTable edge_inclusion_frequencies(const Graph& g, const GeneratorSpec& spec,
                                              std::uint64_t trials, const RngStream& rng);

struct FrequencyComparison {
  double mean_abs_diff = 0.0;
  double ks_statistic = 0.0;
  double ks_pvalue = 1.0;
};

FrequencyComparison compare_frequency_tables(const EdgeFrequencyTable& a,
                                             const EdgeFrequencyTable& b);

namespace serial {
/// Single-threaded reference for edge_inclusion_frequencies.
EdgeFrequencyTable edge_inclusion_frequencies(const Graph& g, const GeneratorSpec& spec,
                                              std::uint64_t trials, const RngStream& rng);
}  // namespace serial

}  // namespace gern
