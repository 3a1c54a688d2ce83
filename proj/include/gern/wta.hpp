#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gern/graph.hpp"
#include "gern/linearize.hpp"
#include "gern/rng.hpp"

namespace gern {

struct GameTranscript {
  std::vector<NodeId> order;
  std::vector<std::int32_t> predictions;
  std::vector<std::int32_t> truths;
  std::vector<char> mistakes;
  std::size_t total_mistakes = 0;
};

/// Sequential nearest-revealed-neighbor prediction along `path`.
///
/// At step t the label of node order[t] is predicted by copying the label
/// of the already revealed node closest to it on the path; equidistant
/// candidates on both sides go to the one revealed earlier. The very first
/// prediction is `default_label`. Each true label is revealed after its
/// prediction.
GameTranscript wta_play(const PathGraph& path, const Labels& y, std::span<const NodeId> order,
                        std::int32_t default_label);

enum class OrderMode {
  Random,
  /// Placeholder: currently draws a random order as well.
  AdversarialStub,
};

struct MistakeSummary {
  double mean = 0.0;
  double std_error = 0.0;
  std::vector<std::size_t> per_trial;
};

/// Each trial draws a Wilson tree, linearizes it and plays against a fresh
/// random presentation order. Trial t uses rng.derive(t).
MistakeSummary wta_expected_mistakes(const Graph& g, const Labels& y, std::uint64_t trials,
                                     OrderMode mode, const RngStream& rng,
                                     std::int32_t default_label = 0);

}  // namespace gern
