#include "gern/resistance.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Eigenvalues>

#include "gern/error.hpp"

namespace gern {

Eigen::MatrixXd laplacian_matrix(const Graph& g) {
  const auto n = static_cast<Eigen::Index>(g.node_count());
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const Edge& e : g.edges()) {
    lap(e.u, e.u) += 1.0;
    lap(e.v, e.v) += 1.0;
    lap(e.u, e.v) -= 1.0;
    lap(e.v, e.u) -= 1.0;
  }
  return lap;
}

Eigen::MatrixXd laplacian_pseudoinverse(const Graph& g, NodeId size_cap) {
  if (g.node_count() > size_cap) {
    throw Error(ErrorKind::SizeCapExceeded, std::to_string(g.node_count()) +
                                                " nodes exceed the dense cap of " +
                                                std::to_string(size_cap));
  }
  const auto n = static_cast<Eigen::Index>(g.node_count());
  if (n == 0) return {};
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(laplacian_matrix(g));
  if (solver.info() != Eigen::Success) {
    throw Error(ErrorKind::NumericalFailure, "eigensolver did not converge");
  }
  const Eigen::VectorXd& lambda = solver.eigenvalues();
  const double threshold = 1e-9 * std::max(lambda.maxCoeff(), 0.0);
  Eigen::VectorXd inverse = Eigen::VectorXd::Zero(n);
  Eigen::Index zeros = 0;
  for (Eigen::Index k = 0; k < n; ++k) {
    if (lambda(k) > threshold) {
      inverse(k) = 1.0 / lambda(k);
    } else {
      ++zeros;
    }
  }
  if (zeros != 1) {
    throw Error(ErrorKind::NumericalFailure,
                "Laplacian has " + std::to_string(zeros) + " near-zero eigenvalues; expected 1");
  }
  const Eigen::MatrixXd& vectors = solver.eigenvectors();
  return vectors * inverse.asDiagonal() * vectors.transpose();
}

ResistanceMatrix ResistanceMatrix::exact(const Graph& g, Eigen::MatrixXd pairwise) {
  ResistanceMatrix r;
  r.method_ = ResistanceMethod::Exact;
  r.node_count_ = g.node_count();
  r.edges_.assign(g.edges().begin(), g.edges().end());
  r.edge_values_.reserve(r.edges_.size());
  for (const Edge& e : r.edges_) r.edge_values_.push_back(pairwise(e.u, e.v));
  r.edge_std_errors_.assign(r.edges_.size(), 0.0);
  r.pairwise_ = std::move(pairwise);
  return r;
}

ResistanceMatrix ResistanceMatrix::monte_carlo(const EdgeFrequencyTable& table) {
  ResistanceMatrix r;
  r.method_ = ResistanceMethod::MonteCarlo;
  r.trials_ = table.trials;
  r.edges_ = table.edges;
  for (const Edge& e : r.edges_) r.node_count_ = std::max({r.node_count_, e.u + 1, e.v + 1});
  r.edge_values_ = table.frequencies();
  r.edge_std_errors_.reserve(r.edges_.size());
  for (EdgeId e = 0; e < r.edges_.size(); ++e) r.edge_std_errors_.push_back(table.standard_error(e));
  return r;
}

double ResistanceMatrix::at(NodeId i, NodeId j) const {
  if (i == j) return 0.0;
  if (has_pairwise()) {
    if (i >= node_count_ || j >= node_count_) {
      throw Error(ErrorKind::InvalidIndex, "resistance index out of range");
    }
    return pairwise_(i, j);
  }
  const Edge key = i < j ? Edge{i, j} : Edge{j, i};
  const auto it = std::lower_bound(edges_.begin(), edges_.end(), key);
  if (it == edges_.end() || *it != key) {
    throw Error(ErrorKind::MissingEdgeResistance, "no estimate for pair (" + std::to_string(i) +
                                                      ", " + std::to_string(j) + ")");
  }
  return edge_values_[static_cast<std::size_t>(it - edges_.begin())];
}

ResistanceMatrix effective_resistance_exact(const Graph& g, NodeId size_cap) {
  const Eigen::MatrixXd pinv = laplacian_pseudoinverse(g, size_cap);
  const auto n = pinv.rows();
  Eigen::MatrixXd r(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < n; ++j) {
      r(i, j) = i == j ? 0.0 : pinv(i, i) + pinv(j, j) - 2.0 * pinv(i, j);
    }
  }
  return ResistanceMatrix::exact(g, std::move(r));
}

ResistanceMatrix effective_resistance_mc(const Graph& g, std::uint64_t trials,
                                         const GeneratorSpec& generator, const RngStream& rng) {
  return ResistanceMatrix::monte_carlo(edge_inclusion_frequencies(g, generator, trials, rng));
}

double resistance_weighted_cutsize(const Graph& g, const Labels& y, const ResistanceMatrix& r) {
  if (y.size() != g.node_count()) {
    throw Error(ErrorKind::LengthMismatch, "labels length differs from node count");
  }
  const auto edges = g.edges();
  if (r.edges().size() != edges.size() ||
      !std::equal(edges.begin(), edges.end(), r.edges().begin())) {
    throw Error(ErrorKind::MissingEdgeResistance,
                "resistance values were computed for a different edge set");
  }
  const auto values = r.edge_values();
  double total = 0.0;
  for (EdgeId e = 0; e < edges.size(); ++e) {
    if (y[edges[e].u] != y[edges[e].v]) total += values[e];
  }
  return total;
}

}  // namespace gern
