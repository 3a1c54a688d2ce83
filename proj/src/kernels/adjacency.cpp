#include <cmath>
#include <string>

#include "gern/error.hpp"
#include "gern/kernels.hpp"

namespace gern {

namespace {

double normalizing_degree(std::uint32_t degree, DegreeConvention convention) {
  if (convention == DegreeConvention::SelfLoop) return static_cast<double>(degree) + 1.0;
  return degree == 0 ? 1.0 : static_cast<double>(degree);
}

}  // namespace

NormalizedAdjacency::NormalizedAdjacency(const Graph& g, DegreeConvention convention) {
  std::vector<std::uint32_t> degrees(g.node_count());
  for (NodeId i = 0; i < g.node_count(); ++i) degrees[i] = g.degree(i);
  *this = NormalizedAdjacency(g, degrees, convention);
}

NormalizedAdjacency::NormalizedAdjacency(const Graph& g, std::span<const std::uint32_t> degrees,
                                         DegreeConvention convention) {
  const NodeId n = g.node_count();
  if (degrees.size() != n) {
    throw Error(ErrorKind::LengthMismatch, "degree vector length " +
                                               std::to_string(degrees.size()) + " != " +
                                               std::to_string(n));
  }
  std::vector<double> inv_sqrt(n);
  for (NodeId i = 0; i < n; ++i) {
    inv_sqrt[i] = 1.0 / std::sqrt(normalizing_degree(degrees[i], convention));
  }
  offsets_.assign(static_cast<std::size_t>(n) + 1, 0);
  columns_.reserve(static_cast<std::size_t>(n) + 2 * g.edge_count());
  values_.reserve(columns_.capacity());
  for (NodeId i = 0; i < n; ++i) {
    columns_.push_back(i);
    values_.push_back(inv_sqrt[i] * inv_sqrt[i]);
    for (NodeId j : g.neighbors(i)) {
      columns_.push_back(j);
      values_.push_back(inv_sqrt[i] * inv_sqrt[j]);
    }
    offsets_[i + 1] = static_cast<std::uint32_t>(columns_.size());
  }
}

}  // namespace gern
