#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gern/graph.hpp"
#include "gern/matrix.hpp"

namespace gern {

enum class DegreeConvention {
  /// d_i = deg(i) + 1, the renormalization with A + I.
  SelfLoop,
  /// d_i = deg(i); isolated nodes use 1.
  Plain,
};

/// Sparse (A + I) with entries 1 / sqrt(d_i d_j), stored row-wise.
///
/// The diagonal entry of row i comes first, followed by its neighbors in
/// ascending order.
class NormalizedAdjacency {
 public:
  NormalizedAdjacency() = default;
  explicit NormalizedAdjacency(const Graph& g,
                               DegreeConvention convention = DegreeConvention::SelfLoop);
  /// Uses `degrees[i]` (a degree in some enclosing graph) instead of the
  /// degree of i in `g`; used when `g` is a neighborhood cut out of a
  /// larger graph whose normalization must be preserved.
  NormalizedAdjacency(const Graph& g, std::span<const std::uint32_t> degrees,
                      DegreeConvention convention = DegreeConvention::SelfLoop);

  std::size_t node_count() const noexcept { return offsets_.size() - 1; }
  std::size_t nonzeros() const noexcept { return columns_.size(); }
  std::span<const std::uint32_t> offsets() const noexcept { return offsets_; }
  std::span<const std::uint32_t> columns() const noexcept { return columns_; }
  std::span<const double> values() const noexcept { return values_; }

 private:
  std::vector<std::uint32_t> offsets_{0};
  std::vector<std::uint32_t> columns_;
  std::vector<double> values_;
};

/// Data-parallel dense/sparse products. `omp` variants parallelize over
/// output rows with OpenMP; `serial` variants are the plain reference loops
/// the tests compare against. Both accumulate every output entry in the
/// same order.
namespace kernels {

namespace serial {
template <class T>
void spmm(const NormalizedAdjacency& a, const Matrix<T>& x, Matrix<T>& out);
template <class T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);
template <class T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);
template <class T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);
}  // namespace serial

namespace omp {
template <class T>
void spmm(const NormalizedAdjacency& a, const Matrix<T>& x, Matrix<T>& out);
/// Rows [begin, end) of spmm into an already sized `out`.
template <class T>
void spmm_rows(const NormalizedAdjacency& a, const Matrix<T>& x, Matrix<T>& out,
               std::size_t begin, std::size_t end);
/// Rows [begin, end) of a * b into an already sized `out`.
template <class T>
void gemm_rows(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out, std::size_t begin,
               std::size_t end);
/// out = a * b
template <class T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);
/// out = a^T * b
template <class T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);
/// out = a * b^T
template <class T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out);
}  // namespace omp

using omp::gemm;
using omp::gemm_rows;
using omp::spmm_rows;
using omp::gemm_nt;
using omp::gemm_tn;
using omp::spmm;

int max_threads();
void set_threads(int threads);

}  // namespace kernels

}  // namespace gern
