#include "gern/wta.hpp"

#include <iterator>
#include <numeric>
#include <set>
#include <string>

#include "gern/error.hpp"
#include "gern/spanning.hpp"
#include "gern/stats.hpp"

namespace gern {

GameTranscript wta_play(const PathGraph& path, const Labels& y, std::span<const NodeId> order,
                        std::int32_t default_label) {
  const NodeId n = path.node_count();
  if (y.size() != n) throw Error(ErrorKind::LengthMismatch, "labels length differs from path");
  if (order.size() != n) throw Error(ErrorKind::LengthMismatch, "order is not a permutation");
  std::vector<char> seen(n, 0);
  for (NodeId v : order) {
    if (v >= n || seen[v]) throw Error(ErrorKind::InvalidArgument, "order is not a permutation");
    seen[v] = 1;
  }

  GameTranscript out;
  out.order.assign(order.begin(), order.end());
  out.predictions.reserve(n);
  out.truths.reserve(n);
  out.mistakes.reserve(n);

  const auto position = path.position();
  const auto path_order = path.order();
  std::set<NodeId> revealed;  // path positions
  std::vector<NodeId> reveal_step(n, kNoNode);
  for (NodeId step = 0; step < n; ++step) {
    const NodeId node = order[step];
    const NodeId pos = position[node];
    std::int32_t prediction = default_label;
    if (!revealed.empty()) {
      const auto right = revealed.lower_bound(pos);
      NodeId best = kNoNode;
      if (right != revealed.end()) best = *right;
      if (right != revealed.begin()) {
        const NodeId left = *std::prev(right);
        if (best == kNoNode) {
          best = left;
        } else {
          const NodeId dl = pos - left;
          const NodeId dr = best - pos;
          if (dl < dr || (dl == dr && reveal_step[left] < reveal_step[best])) best = left;
        }
      }
      prediction = y[path_order[best]];
    }
    const std::int32_t truth = y[node];
    out.predictions.push_back(prediction);
    out.truths.push_back(truth);
    out.mistakes.push_back(prediction != truth ? 1 : 0);
    out.total_mistakes += prediction != truth ? 1 : 0;
    revealed.insert(pos);
    reveal_step[pos] = step;
  }
  return out;
}

MistakeSummary wta_expected_mistakes(const Graph& g, const Labels& y, std::uint64_t trials,
                                     OrderMode mode, const RngStream& rng,
                                     std::int32_t default_label) {
  (void)mode;  // both modes draw uniformly random orders
  if (trials == 0) throw Error(ErrorKind::InvalidArgument, "trial count must be >= 1");
  if (y.size() != g.node_count()) throw Error(ErrorKind::LengthMismatch, "labels length");
  MistakeSummary out;
  out.per_trial.assign(trials, 0);
  const auto count = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t t = 0; t < count; ++t) {
    RngStream local = rng.derive(static_cast<std::uint64_t>(t));
    const SpanningTree tree = wilson(g, local);
    const PathGraph path = dfs_linearize(tree, std::nullopt, local);
    std::vector<NodeId> order(g.node_count());
    std::iota(order.begin(), order.end(), NodeId{0});
    local.shuffle(std::span<NodeId>(order));
    out.per_trial[static_cast<std::size_t>(t)] =
        wta_play(path, y, order, default_label).total_mistakes;
  }
  std::vector<double> values(out.per_trial.begin(), out.per_trial.end());
  const stats::MeanStderr ms = stats::mean_stderr(values);
  out.mean = ms.mean;
  out.std_error = ms.std_error;
  return out;
}

}  // namespace gern
