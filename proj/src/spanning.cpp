#include "gern/spanning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "gern/error.hpp"
#include "gern/stats.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gern {

namespace {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  bool unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent_[a] = b;
    return true;
  }

 private:
  std::vector<std::size_t> parent_;
};

NodeId random_neighbor(const Graph& g, NodeId u, RngStream& rng) {
  const auto nbrs = g.neighbors(u);
  return nbrs[rng.uniform_index(nbrs.size())];
}

void require_nonempty(const Graph& g) {
  if (g.node_count() == 0) throw Error(ErrorKind::InvalidArgument, "graph has no nodes");
}

// Completes a partial tree: nodes with in_tree set are already attached
// (their parent entries are final). Unattached nodes are processed in
// ascending index order by loop-erased random walks.
void wilson_complete(const Graph& g, std::vector<char>& in_tree, std::vector<NodeId>& parent,
                     RngStream& rng, std::uint64_t& steps, std::uint64_t cap) {
  const NodeId n = g.node_count();
  std::vector<NodeId> next(n, kNoNode);
  for (NodeId start = 0; start < n; ++start) {
    NodeId u = start;
    while (!in_tree[u]) {
      next[u] = random_neighbor(g, u, rng);
      u = next[u];
      if (++steps > cap) {
        throw Error(ErrorKind::StepCapExceeded,
                    "Wilson walk exceeded " + std::to_string(cap) + " steps");
      }
    }
    u = start;
    while (!in_tree[u]) {
      in_tree[u] = 1;
      parent[u] = next[u];
      u = next[u];
    }
  }
}

}  // namespace

SpanningTree SpanningTree::from_parents(const Graph& g, NodeId root, std::vector<NodeId> parent) {
  const NodeId n = g.node_count();
  if (parent.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "parent array length differs from node count");
  }
  if (root >= n || parent[root] != kNoNode) {
    throw Error(ErrorKind::InvalidArgument, "root must be a node with no parent");
  }
  SpanningTree t;
  t.root_ = root;
  t.edge_ids_.reserve(n > 0 ? n - 1 : 0);
  UnionFind uf(n);
  for (NodeId v = 0; v < n; ++v) {
    if (v == root) continue;
    const NodeId p = parent[v];
    const auto id = g.find_edge(v, p);
    if (!id) {
      throw Error(ErrorKind::InvalidArgument, "tree edge (" + std::to_string(v) + ", " +
                                                  std::to_string(p) + ") not in graph");
    }
    if (!uf.unite(v, p)) {
      throw Error(ErrorKind::InvalidArgument, "parent pointers contain a cycle");
    }
    t.edge_ids_.push_back(*id);
  }
  std::sort(t.edge_ids_.begin(), t.edge_ids_.end());
  t.edges_.reserve(t.edge_ids_.size());
  for (EdgeId id : t.edge_ids_) t.edges_.push_back(g.edge(id));
  t.parent_ = std::move(parent);
  return t;
}

Graph SpanningTree::as_graph() const {
  return Graph::from_edges(edges_, node_count(), Connectivity::Require);
}

std::string_view to_string(TreeGenerator generator) noexcept {
  switch (generator) {
    case TreeGenerator::Wilson: return "wilson";
    case TreeGenerator::AldousBroder: return "aldous-broder";
    case TreeGenerator::ARst: return "a-rst";
    case TreeGenerator::RandomBfs: return "bfs";
  }
  return "unknown";
}

TreeGenerator parse_tree_generator(std::string_view name) {
  if (name == "wilson") return TreeGenerator::Wilson;
  if (name == "aldous-broder" || name == "ab") return TreeGenerator::AldousBroder;
  if (name == "a-rst" || name == "arst") return TreeGenerator::ARst;
  if (name == "bfs" || name == "random-bfs") return TreeGenerator::RandomBfs;
  throw Error(ErrorKind::InvalidArgument, "unknown tree generator '" + std::string(name) + "'");
}

std::uint64_t walk_step_cap(NodeId n) {
  return static_cast<std::uint64_t>(1e4 * n * std::log(static_cast<double>(n) + 1.0)) + 1;
}

SpanningTree aldous_broder(const Graph& g, RngStream& rng) {
  require_nonempty(g);
  const NodeId n = g.node_count();
  const std::uint64_t cap = walk_step_cap(n);
  std::vector<NodeId> parent(n, kNoNode);
  std::vector<char> visited(n, 0);
  const auto root = static_cast<NodeId>(rng.uniform_index(n));
  visited[root] = 1;
  NodeId current = root;
  NodeId remaining = n - 1;
  std::uint64_t steps = 0;
  while (remaining > 0) {
    const NodeId next = random_neighbor(g, current, rng);
    if (!visited[next]) {
      visited[next] = 1;
      parent[next] = current;
      --remaining;
    }
    current = next;
    if (++steps > cap) {
      throw Error(ErrorKind::StepCapExceeded,
                  "random walk exceeded " + std::to_string(cap) + " steps");
    }
  }
  return SpanningTree::from_parents(g, root, std::move(parent));
}

SpanningTree wilson(const Graph& g, RngStream& rng) {
  require_nonempty(g);
  const NodeId n = g.node_count();
  std::vector<NodeId> parent(n, kNoNode);
  std::vector<char> in_tree(n, 0);
  const auto root = static_cast<NodeId>(rng.uniform_index(n));
  in_tree[root] = 1;
  std::uint64_t steps = 0;
  wilson_complete(g, in_tree, parent, rng, steps, walk_step_cap(n));
  return SpanningTree::from_parents(g, root, std::move(parent));
}

SpanningTree a_rst(const Graph& g, double beta, RngStream& rng) {
  require_nonempty(g);
  if (!(beta > 0.0 && beta <= 1.0)) {
    throw Error(ErrorKind::InvalidArgument, "beta must lie in (0, 1]");
  }
  const NodeId n = g.node_count();
  std::vector<NodeId> parent(n, kNoNode);
  std::vector<char> in_tree(n, 0);
  const auto root = static_cast<NodeId>(rng.uniform_index(n));
  in_tree[root] = 1;
  NodeId current = root;
  NodeId remaining = n - 1;
  const auto walk_steps = static_cast<std::uint64_t>(std::floor(beta * n));
  for (std::uint64_t step = 0; step < walk_steps && remaining > 0; ++step) {
    const NodeId next = random_neighbor(g, current, rng);
    if (!in_tree[next]) {
      in_tree[next] = 1;
      parent[next] = current;
      --remaining;
    }
    current = next;
  }
  std::uint64_t steps = walk_steps;
  wilson_complete(g, in_tree, parent, rng, steps, walk_step_cap(n) + walk_steps);
  return SpanningTree::from_parents(g, root, std::move(parent));
}

SpanningTree random_bfs_tree(const Graph& g, RngStream& rng) {
  require_nonempty(g);
  const NodeId n = g.node_count();
  std::vector<NodeId> parent(n, kNoNode);
  std::vector<char> seen(n, 0);
  const auto root = static_cast<NodeId>(rng.uniform_index(n));
  seen[root] = 1;
  std::vector<NodeId> queue{root};
  std::vector<NodeId> order;
  for (std::size_t head = 0; head < queue.size(); ++head) {
    const NodeId u = queue[head];
    const auto nbrs = g.neighbors(u);
    order.assign(nbrs.begin(), nbrs.end());
    rng.shuffle(std::span<NodeId>(order));
    for (NodeId w : order) {
      if (!seen[w]) {
        seen[w] = 1;
        parent[w] = u;
        queue.push_back(w);
      }
    }
  }
  if (queue.size() != n) {
    throw Error(ErrorKind::DisconnectedGraph, "BFS did not reach every node");
  }
  return SpanningTree::from_parents(g, root, std::move(parent));
}

SpanningTree generate_tree(const Graph& g, const GeneratorSpec& spec, RngStream& rng) {
  switch (spec.kind) {
    case TreeGenerator::Wilson: return wilson(g, rng);
    case TreeGenerator::AldousBroder: return aldous_broder(g, rng);
    case TreeGenerator::ARst: return a_rst(g, spec.beta, rng);
    case TreeGenerator::RandomBfs: return random_bfs_tree(g, rng);
  }
  throw Error(ErrorKind::InvalidArgument, "unknown tree generator");
}

double EdgeFrequencyTable::standard_error(EdgeId e) const {
  const double p = frequency(e);
  return std::sqrt(p * (1.0 - p) / static_cast<double>(trials));
}

std::vector<double> EdgeFrequencyTable::frequencies() const {
  std::vector<double> out(counts.size());
  for (EdgeId e = 0; e < counts.size(); ++e) out[e] = frequency(e);
  return out;
}

void EdgeFrequencyTable::merge(const EdgeFrequencyTable& other) {
  if (edges != other.edges) throw Error(ErrorKind::EdgeSetMismatch, "cannot merge tallies");
  for (std::size_t e = 0; e < counts.size(); ++e) counts[e] += other.counts[e];
  trials += other.trials;
}

namespace {

constexpr std::uint64_t kTrialsPerChunk = 256;

EdgeFrequencyTable empty_table(const Graph& g) {
  EdgeFrequencyTable table;
  table.edges.assign(g.edges().begin(), g.edges().end());
  table.counts.assign(g.edge_count(), 0);
  return table;
}

void tally_chunk(const Graph& g, const GeneratorSpec& spec, std::uint64_t chunk,
                 std::uint64_t trials, const RngStream& rng, std::vector<std::uint64_t>& counts) {
  RngStream local = rng.derive(chunk);
  const std::uint64_t begin = chunk * kTrialsPerChunk;
  const std::uint64_t end = std::min(trials, begin + kTrialsPerChunk);
  for (std::uint64_t t = begin; t < end; ++t) {
    const SpanningTree tree = generate_tree(g, spec, local);
    for (EdgeId id : tree.edge_ids()) ++counts[id];
  }
}

void require_trials(std::uint64_t trials) {
  if (trials == 0) throw Error(ErrorKind::InvalidArgument, "trial count must be >= 1");
}

}  // namespace

namespace serial {

EdgeFrequencyTable edge_inclusion_frequencies(const Graph& g, const GeneratorSpec& spec,
                                              std::uint64_t trials, const RngStream& rng) {
  require_trials(trials);
  EdgeFrequencyTable table = empty_table(g);
  const std::uint64_t chunks = (trials + kTrialsPerChunk - 1) / kTrialsPerChunk;
  for (std::uint64_t c = 0; c < chunks; ++c) tally_chunk(g, spec, c, trials, rng, table.counts);
  table.trials = trials;
  return table;
}

}  // namespace serial

EdgeFrequencyTable edge_inclusion_frequencies(const Graph& g, const GeneratorSpec& spec,
                                              std::uint64_t trials, const RngStream& rng) {
  require_trials(trials);
  EdgeFrequencyTable table = empty_table(g);
  const auto chunks = static_cast<std::int64_t>((trials + kTrialsPerChunk - 1) / kTrialsPerChunk);
#pragma omp parallel
  {
    std::vector<std::uint64_t> local(g.edge_count(), 0);
#pragma omp for schedule(dynamic)
    for (std::int64_t c = 0; c < chunks; ++c) {
      tally_chunk(g, spec, static_cast<std::uint64_t>(c), trials, rng, local);
    }
#pragma omp critical
    for (std::size_t e = 0; e < local.size(); ++e) table.counts[e] += local[e];
  }
  table.trials = trials;
  return table;
}

FrequencyComparison compare_frequency_tables(const EdgeFrequencyTable& a,
                                             const EdgeFrequencyTable& b) {
  if (a.edges != b.edges) {
    throw Error(ErrorKind::EdgeSetMismatch, "frequency tables cover different edge sets");
  }
  FrequencyComparison out;
  if (a.edges.empty()) return out;
  const std::vector<double> fa = a.frequencies();
  const std::vector<double> fb = b.frequencies();
  double sum = 0.0;
  for (std::size_t e = 0; e < fa.size(); ++e) sum += std::abs(fa[e] - fb[e]);
  out.mean_abs_diff = sum / static_cast<double>(fa.size());
  const stats::KsResult ks = stats::ks_two_sample(fa, fb);
  out.ks_statistic = ks.statistic;
  out.ks_pvalue = ks.pvalue;
  return out;
}

}  // namespace gern
