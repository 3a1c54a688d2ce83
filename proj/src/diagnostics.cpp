#include "gern/diagnostics.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include "gern/error.hpp"
#include "gern/kernels.hpp"
#include "gern/linearize.hpp"
#include "gern/spanning.hpp"
#include "gern/stats.hpp"

namespace gern {

const char* to_string(DiagnosticVariant v) noexcept {
  switch (v) {
    case DiagnosticVariant::Full: return "full";
    case DiagnosticVariant::Rst: return "rst";
    case DiagnosticVariant::Rpg: return "rpg";
  }
  return "?";
}

DiagnosticVariant parse_diagnostic_variant(const std::string& name) {
  if (name == "full") return DiagnosticVariant::Full;
  if (name == "rst") return DiagnosticVariant::Rst;
  if (name == "rpg") return DiagnosticVariant::Rpg;
  throw Error(ErrorKind::InvalidArgument, "unknown variant '" + name + "' (full, rst, rpg)");
}

template <class T>
double oversmoothing_metric(const Matrix<T>& x) {
  if (x.empty()) throw Error(ErrorKind::InvalidArgument, "empty representation matrix");
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) mean[c] += row[c];
  }
  for (double& m : mean) m /= static_cast<double>(x.rows());
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    const auto row = x.row(i);
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double d = static_cast<double>(row[c]) - mean[c];
      total += d * d;
    }
  }
  return std::sqrt(total);
}

template <class T>
Matrix<T> diagnostic_propagate(const GcnModel<T>& model, const Graph& g, const Matrix<T>& features) {
  if (model.layer_count() == 0) return features;
  return gcn_propagate(model, NormalizedAdjacency(g), features);
}

namespace {

template <class T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// The t-hop ball around a probe with the enclosing graph's normalization and
// the pre-activations of every layer on it.
template <class T>
struct ProbeState {
  Neighborhood ball;
  NormalizedAdjacency adjacency;
  NodeId local_probe = 0;
  std::vector<NodeId> distance;
  std::vector<Matrix<T>> pre_activations;
};

template <class T>
ProbeState<T> probe_state(const GcnModel<T>& model, const Graph& g, const Matrix<T>& features,
                          NodeId v) {
  if (v >= g.node_count()) throw Error(ErrorKind::InvalidIndex, "probe node out of range");
  if (features.rows() != g.node_count()) {
    throw Error(ErrorKind::ShapeMismatch, "feature rows do not match the graph");
  }
  const auto t = static_cast<std::uint32_t>(model.layer_count());
  ProbeState<T> s;
  const NodeId seed[] = {v};
  s.ball = k_hop_neighborhood(g, seed, t);
  std::vector<std::uint32_t> degrees(s.ball.nodes.size());
  for (std::size_t i = 0; i < degrees.size(); ++i) degrees[i] = g.degree(s.ball.nodes[i]);
  s.adjacency = NormalizedAdjacency(s.ball.induced, degrees);
  s.local_probe = s.ball.local_of[v];
  const NodeId local_seed[] = {s.local_probe};
  s.distance = bfs_distances(s.ball.induced, local_seed, t);

  Matrix<T> h = gather_rows(features, s.ball.nodes);
  Matrix<T> projected;
  for (std::size_t l = 0; l < model.layer_count(); ++l) {
    kernels::gemm(h, model.weights[l], projected);
    Matrix<T> z;
    kernels::spmm(s.adjacency, projected, z);
    h = z;
    for (T& x : h.values()) x = x > T{0} ? x : T{0};
    s.pre_activations.push_back(std::move(z));
  }
  return s;
}

template <class T>
double identity_influence(NodeId v, std::span<const NodeId> sources, std::size_t width) {
  const bool hit = std::find(sources.begin(), sources.end(), v) != sources.end();
  return hit ? static_cast<double>(width) : 0.0;
}

}  // namespace

template <class T>
double oversquashing_influence(const GcnModel<T>& model, const Graph& g, const Matrix<T>& features,
                               NodeId v, std::span<const NodeId> sources) {
  const std::size_t t = model.layer_count();
  if (t == 0) return identity_influence<T>(v, sources, features.cols());
  const ProbeState<T> s = probe_state(model, g, features, v);
  const std::size_t local_n = s.ball.nodes.size();
  const std::size_t d_out = model.weights.back().cols();
  const auto offsets = s.adjacency.offsets();
  const auto columns = s.adjacency.columns();
  const auto coeffs = s.adjacency.values();

  // Blocks of d_out rows, one per node in `nodes`; block k belongs to nodes[k].
  std::vector<NodeId> nodes{s.local_probe};
  std::vector<std::int64_t> slot(local_n, -1);
  RowMat<T> grad = RowMat<T>::Identity(static_cast<Eigen::Index>(d_out),
                                       static_cast<Eigen::Index>(d_out));

  for (std::size_t l = t; l-- > 0;) {
    const Matrix<T>& z = s.pre_activations[l];
    const std::size_t width = grad.cols();
    if (l + 1 < t) {
      for (std::size_t k = 0; k < nodes.size(); ++k) {
        const auto zrow = z.row(nodes[k]);
        for (std::size_t c = 0; c < width; ++c) {
          if (!(zrow[c] > T{0})) {
            grad.block(static_cast<Eigen::Index>(k * d_out), static_cast<Eigen::Index>(c),
                       static_cast<Eigen::Index>(d_out), 1)
                .setZero();
          }
        }
      }
    }
    std::fill(slot.begin(), slot.end(), -1);
    for (std::size_t k = 0; k < nodes.size(); ++k) slot[nodes[k]] = static_cast<std::int64_t>(k);

    std::vector<NodeId> targets;
    if (l == 0) {
      for (NodeId u : sources) {
        if (u < g.node_count() && s.ball.local_of[u] != kNoNode) targets.push_back(s.ball.local_of[u]);
      }
      std::sort(targets.begin(), targets.end());
      targets.erase(std::unique(targets.begin(), targets.end()), targets.end());
    } else {
      for (NodeId j = 0; j < local_n; ++j) {
        if (s.distance[j] <= t - l) targets.push_back(j);
      }
    }

    RowMat<T> gathered = RowMat<T>::Zero(static_cast<Eigen::Index>(targets.size() * d_out),
                                         static_cast<Eigen::Index>(width));
    for (std::size_t k = 0; k < targets.size(); ++k) {
      const NodeId j = targets[k];
      auto dst = gathered.middleRows(static_cast<Eigen::Index>(k * d_out),
                                     static_cast<Eigen::Index>(d_out));
      for (std::uint32_t e = offsets[j]; e < offsets[j + 1]; ++e) {
        const std::int64_t src = slot[columns[e]];
        if (src < 0) continue;
        dst += static_cast<T>(coeffs[e]) *
               grad.middleRows(static_cast<Eigen::Index>(src * d_out), static_cast<Eigen::Index>(d_out));
      }
    }
    const Matrix<T>& w = model.weights[l];
    const Eigen::Map<const RowMat<T>> wmap(w.data(), static_cast<Eigen::Index>(w.rows()),
                                           static_cast<Eigen::Index>(w.cols()));
    grad.noalias() = gathered * wmap.transpose();
    nodes = std::move(targets);
  }
  return static_cast<double>(grad.template cast<double>().cwiseAbs().sum());
}

template <class T>
double oversquashing_influence_forward(const GcnModel<T>& model, const Graph& g,
                                       const Matrix<T>& features, NodeId v,
                                       std::span<const NodeId> sources) {
  const std::size_t t = model.layer_count();
  if (t == 0) return identity_influence<T>(v, sources, features.cols());
  const ProbeState<T> s = probe_state(model, g, features, v);
  const std::size_t local_n = s.ball.nodes.size();
  std::vector<NodeId> unique_sources(sources.begin(), sources.end());
  std::sort(unique_sources.begin(), unique_sources.end());
  unique_sources.erase(std::unique(unique_sources.begin(), unique_sources.end()),
                       unique_sources.end());
  double total = 0.0;
  Matrix<T> projected;
  for (NodeId u : unique_sources) {
    if (u >= g.node_count() || s.ball.local_of[u] == kNoNode) continue;
    for (std::size_t k = 0; k < features.cols(); ++k) {
      Matrix<T> tangent(local_n, features.cols());
      tangent(s.ball.local_of[u], k) = T{1};
      for (std::size_t l = 0; l < t; ++l) {
        kernels::gemm(tangent, model.weights[l], projected);
        kernels::spmm(s.adjacency, projected, tangent);
        if (l + 1 < t) {
          const auto z = s.pre_activations[l].values();
          auto values = tangent.values();
          for (std::size_t q = 0; q < values.size(); ++q) {
            if (!(z[q] > T{0})) values[q] = T{0};
          }
        }
      }
      for (T x : tangent.row(s.local_probe)) total += std::abs(static_cast<double>(x));
    }
  }
  return total;
}

namespace {

struct TrialGraphs {
  Matrix<float> features;
  Graph tree;
  Graph path;
};

TrialGraphs draw_trial(const Graph& g, std::size_t width, const RngStream& trial_rng) {
  TrialGraphs out;
  RngStream feature_rng = trial_rng.derive(0);
  out.features = Matrix<float>(g.node_count(), width);
  for (float& x : out.features.values()) x = static_cast<float>(feature_rng.normal());
  RngStream tree_rng = trial_rng.derive(1);
  const SpanningTree tree = wilson(g, tree_rng);
  out.tree = tree.as_graph();
  out.path = dfs_linearize(tree, std::nullopt, tree_rng).to_graph();
  return out;
}

GcnModel<float> depth_model(std::size_t depth, std::size_t width, const RngStream& trial_rng) {
  GcnModel<float> model;
  model.dropout = 0.0;
  if (depth == 0) return model;
  RngStream weight_rng = trial_rng.derive(100 + depth);
  const std::vector<std::size_t> dims(depth + 1, width);
  return glorot_init<float>(dims, 0.0, weight_rng);
}

const Graph& variant_graph(DiagnosticVariant variant, const Graph& g, const TrialGraphs& trial) {
  switch (variant) {
    case DiagnosticVariant::Full: return g;
    case DiagnosticVariant::Rst: return trial.tree;
    case DiagnosticVariant::Rpg: return trial.path;
  }
  return g;
}

DiagnosticRun summarize(DiagnosticVariant variant, std::size_t depth, std::vector<double> values) {
  DiagnosticRun run;
  run.variant = variant;
  run.depth = depth;
  const auto summary = stats::mean_stderr(values);
  run.mean = summary.mean;
  run.std_error = summary.std_error;
  run.values = std::move(values);
  return run;
}

void require_inputs(std::span<const std::size_t> depths, std::size_t width, std::size_t trials) {
  if (depths.empty()) throw Error(ErrorKind::InvalidArgument, "no depths given");
  if (width == 0) throw Error(ErrorKind::InvalidDims, "width must be positive");
  if (trials == 0) throw Error(ErrorKind::InvalidArgument, "trials must be positive");
}

}  // namespace

std::vector<DiagnosticRun> oversmoothing_curve(const Graph& g, std::span<const std::size_t> depths,
                                               std::size_t width, std::size_t trials,
                                               std::span<const DiagnosticVariant> variants,
                                               const RngStream& rng) {
  require_inputs(depths, width, trials);
  // values[(d * variants + k) * trials + trial]
  std::vector<double> values(depths.size() * variants.size() * trials);
  const auto total = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t trial = 0; trial < total; ++trial) {
    const RngStream trial_rng = rng.derive(static_cast<std::uint64_t>(trial));
    const TrialGraphs graphs = draw_trial(g, width, trial_rng);
    for (std::size_t d = 0; d < depths.size(); ++d) {
      const GcnModel<float> model = depth_model(depths[d], width, trial_rng);
      for (std::size_t k = 0; k < variants.size(); ++k) {
        const Matrix<float> out =
            diagnostic_propagate(model, variant_graph(variants[k], g, graphs), graphs.features);
        values[(d * variants.size() + k) * trials + static_cast<std::size_t>(trial)] =
            oversmoothing_metric(out);
      }
    }
  }
  std::vector<DiagnosticRun> runs;
  for (std::size_t d = 0; d < depths.size(); ++d) {
    for (std::size_t k = 0; k < variants.size(); ++k) {
      const auto first = values.begin() + static_cast<std::ptrdiff_t>((d * variants.size() + k) * trials);
      runs.push_back(summarize(variants[k], depths[d],
                               std::vector<double>(first, first + static_cast<std::ptrdiff_t>(trials))));
    }
  }
  return runs;
}

std::vector<DiagnosticRun> oversquashing_experiment(const Graph& g,
                                                    std::span<const std::size_t> depths,
                                                    std::size_t width, std::size_t trials,
                                                    const RngStream& rng, std::size_t probes,
                                                    std::vector<ProbeRecord>* audit) {
  require_inputs(depths, width, trials);
  if (probes == 0) throw Error(ErrorKind::InvalidArgument, "probes must be positive");
  constexpr std::size_t kVariants = std::size(kAllVariants);
  const std::size_t probe_count = std::min<std::size_t>(probes, g.node_count());
  std::vector<double> values(depths.size() * kVariants * trials);
  std::vector<std::vector<ProbeRecord>> records(trials);
  const auto total = static_cast<std::int64_t>(trials);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::int64_t trial = 0; trial < total; ++trial) {
    const auto tr = static_cast<std::size_t>(trial);
    const RngStream trial_rng = rng.derive(tr);
    const TrialGraphs graphs = draw_trial(g, width, trial_rng);
    RngStream probe_rng = trial_rng.derive(2);
    std::vector<NodeId> nodes(g.node_count());
    std::iota(nodes.begin(), nodes.end(), NodeId{0});
    for (std::size_t k = 0; k < probe_count; ++k) {
      std::swap(nodes[k], nodes[k + probe_rng.uniform_index(nodes.size() - k)]);
    }
    nodes.resize(probe_count);

    for (std::size_t d = 0; d < depths.size(); ++d) {
      const std::size_t t = depths[d];
      const GcnModel<float> model = depth_model(t, width, trial_rng);
      std::array<double, kVariants> sums{};
      for (NodeId v : nodes) {
        const NodeId seed[] = {v};
        ProbeRecord record{tr, t, v, k_hop_neighborhood(graphs.path, seed, static_cast<std::uint32_t>(t)).nodes, {}};
        for (std::size_t k = 0; k < kVariants; ++k) {
          const double value = oversquashing_influence(
              model, variant_graph(kAllVariants[k], g, graphs), graphs.features, v, record.sources);
          record.influence.push_back(value);
          sums[k] += value;
        }
        if (audit != nullptr) records[tr].push_back(std::move(record));
      }
      for (std::size_t k = 0; k < kVariants; ++k) {
        values[(d * kVariants + k) * trials + tr] = sums[k] / static_cast<double>(probe_count);
      }
    }
  }
  if (audit != nullptr) {
    audit->clear();
    for (auto& per_trial : records) {
      for (auto& r : per_trial) audit->push_back(std::move(r));
    }
  }
  std::vector<DiagnosticRun> runs;
  for (std::size_t d = 0; d < depths.size(); ++d) {
    for (std::size_t k = 0; k < kVariants; ++k) {
      const auto first = values.begin() + static_cast<std::ptrdiff_t>((d * kVariants + k) * trials);
      runs.push_back(summarize(kAllVariants[k], depths[d],
                               std::vector<double>(first, first + static_cast<std::ptrdiff_t>(trials))));
    }
  }
  return runs;
}

#define GERN_INSTANTIATE(T)                                                                      \
  template double oversmoothing_metric<T>(const Matrix<T>&);                                     \
  template Matrix<T> diagnostic_propagate<T>(const GcnModel<T>&, const Graph&, const Matrix<T>&); \
  template double oversquashing_influence<T>(const GcnModel<T>&, const Graph&, const Matrix<T>&, \
                                             NodeId, std::span<const NodeId>);                   \
  template double oversquashing_influence_forward<T>(const GcnModel<T>&, const Graph&,           \
                                                     const Matrix<T>&, NodeId,                   \
                                                     std::span<const NodeId>);

GERN_INSTANTIATE(float)
GERN_INSTANTIATE(double)
#undef GERN_INSTANTIATE

}  // namespace gern
