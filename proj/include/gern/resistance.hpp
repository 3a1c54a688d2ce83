#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "gern/graph.hpp"
#include "gern/rng.hpp"
#include "gern/spanning.hpp"

namespace gern {

inline constexpr NodeId kDefaultResistanceSizeCap = 5000;

/// Moore-Penrose pseudoinverse of L = D - A via a dense symmetric
/// eigendecomposition, dropping eigenvalues below 1e-9 * lambda_max.
/// Throws SizeCapExceeded above `size_cap` nodes, NumericalFailure if the
/// eigensolver fails or the null space is not one-dimensional.
Eigen::MatrixXd laplacian_pseudoinverse(const Graph& g,
                                        NodeId size_cap = kDefaultResistanceSizeCap);

Eigen::MatrixXd laplacian_matrix(const Graph& g);

enum class ResistanceMethod { Exact, MonteCarlo };

/// Effective resistances r_ij. Exact matrices hold every pair; Monte-Carlo
/// estimates exist only for graph edges (other entries are unavailable).
class ResistanceMatrix {
 public:
  static ResistanceMatrix exact(const Graph& g, Eigen::MatrixXd pairwise);
  static ResistanceMatrix monte_carlo(const EdgeFrequencyTable& table);

  ResistanceMethod method() const noexcept { return method_; }
  std::uint64_t trials() const noexcept { return trials_; }
  NodeId node_count() const noexcept { return node_count_; }

  std::span<const Edge> edges() const noexcept { return edges_; }
  std::span<const double> edge_values() const noexcept { return edge_values_; }
  /// Standard errors of the Monte-Carlo edge estimates (zero when exact).
  std::span<const double> edge_std_errors() const noexcept { return edge_std_errors_; }

  bool has_pairwise() const noexcept { return pairwise_.size() > 0; }
  /// Any pair for exact matrices; edges only for Monte-Carlo (else
  /// MissingEdgeResistance).
  double at(NodeId i, NodeId j) const;
  const Eigen::MatrixXd& pairwise() const noexcept { return pairwise_; }

 private:
  ResistanceMethod method_ = ResistanceMethod::Exact;
  std::uint64_t trials_ = 0;
  NodeId node_count_ = 0;
  std::vector<Edge> edges_;
  std::vector<double> edge_values_;
  std::vector<double> edge_std_errors_;
  Eigen::MatrixXd pairwise_;
};

/// r_ij = Lp_ii + Lp_jj - 2 Lp_ij for all pairs.
ResistanceMatrix effective_resistance_exact(const Graph& g,
                                            NodeId size_cap = kDefaultResistanceSizeCap);

/// Per-edge inclusion frequency over `trials` random spanning trees.
ResistanceMatrix effective_resistance_mc(const Graph& g, std::uint64_t trials,
                                         const GeneratorSpec& generator, const RngStream& rng);

/// Sum of r_ij over label-disagreeing edges. Throws MissingEdgeResistance
/// when `r` was not computed for this graph's edge set.
double resistance_weighted_cutsize(const Graph& g, const Labels& y, const ResistanceMatrix& r);

}  // namespace gern
