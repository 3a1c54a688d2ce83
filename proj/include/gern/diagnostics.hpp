#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "gern/gcn.hpp"
#include "gern/graph.hpp"
#include "gern/matrix.hpp"
#include "gern/rng.hpp"

namespace gern {

enum class DiagnosticVariant { Full, Rst, Rpg };

const char* to_string(DiagnosticVariant v) noexcept;
DiagnosticVariant parse_diagnostic_variant(const std::string& name);

inline constexpr DiagnosticVariant kAllVariants[] = {DiagnosticVariant::Full, DiagnosticVariant::Rst,
                                                     DiagnosticVariant::Rpg};

struct DiagnosticRun {
  DiagnosticVariant variant = DiagnosticVariant::Full;
  std::size_t depth = 0;
  std::vector<double> values;  // one per trial
  double mean = 0.0;
  double std_error = 0.0;  // sample std / sqrt(trials)
};

/// Frobenius norm of X after subtracting the column means from every row.
template <class T>
double oversmoothing_metric(const Matrix<T>& x);

/// Representations after every layer of `model` (dropout off, no
/// log-softmax); a model without layers returns `features` unchanged.
template <class T>
Matrix<T> diagnostic_propagate(const GcnModel<T>& model, const Graph& g, const Matrix<T>& features);

/// Per trial: X0 ~ N(0, 1) of width `width`, one Wilson tree and its
/// linearization, and for every depth t a Glorot GCN with t layers of
/// `width` channels shared by all variants. Records mu of the depth-t output.
std::vector<DiagnosticRun> oversmoothing_curve(const Graph& g, std::span<const std::size_t> depths,
                                               std::size_t width, std::size_t trials,
                                               std::span<const DiagnosticVariant> variants,
                                               const RngStream& rng);

/// Sum over u in `sources` of the entrywise 1-norm of d X^(t)_v / d X^(0)_u,
/// by reverse mode (one pass carrying all output coordinates of v).
template <class T>
double oversquashing_influence(const GcnModel<T>& model, const Graph& g, const Matrix<T>& features,
                               NodeId v, std::span<const NodeId> sources);

/// Same quantity by forward mode, one tangent per source coordinate.
/// Much slower; used to cross-check the reverse pass.
template <class T>
double oversquashing_influence_forward(const GcnModel<T>& model, const Graph& g,
                                       const Matrix<T>& features, NodeId v,
                                       std::span<const NodeId> sources);

/// One probe of one trial; the same probe and sources serve every variant.
struct ProbeRecord {
  std::size_t trial = 0;
  std::size_t depth = 0;
  NodeId probe = 0;
  std::vector<NodeId> sources;  // t-hop neighborhood of probe on the trial's path graph
  std::vector<double> influence;  // per variant, in kAllVariants order
};

/// Per trial: X0, tree, path and per-depth weights drawn as in
/// oversmoothing_curve, then `probes` distinct probe nodes. Values are the
/// probe-averaged influence of each probe's t-hop path-graph neighborhood.
/// Runs are returned for every variant in kAllVariants order per depth.
std::vector<DiagnosticRun> oversquashing_experiment(const Graph& g,
                                                    std::span<const std::size_t> depths,
                                                    std::size_t width, std::size_t trials,
                                                    const RngStream& rng, std::size_t probes = 20,
                                                    std::vector<ProbeRecord>* audit = nullptr);

}  // namespace gern
