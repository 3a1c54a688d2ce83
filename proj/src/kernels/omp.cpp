#include <algorithm>

#include "gern/kernels.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace gern::kernels {

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int threads) {
#ifdef _OPENMP
  if (threads > 0) omp_set_num_threads(threads);
#else
  (void)threads;
#endif
}

namespace omp {

namespace {

void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::ShapeMismatch, what);
}

// Rows below this count stay on one thread; the fork costs more than the work.
constexpr std::int64_t kParallelRows = 64;

template <class T>
[[gnu::noinline]] void spmm_row(const NormalizedAdjacency& a, const Matrix<T>& x, T* dst,
                                std::size_t i) {
  const auto offsets = a.offsets();
  const auto columns = a.columns();
  const auto values = a.values();
  const std::size_t width = x.cols();
  std::fill(dst, dst + width, T{0});
  for (std::uint32_t k = offsets[i]; k < offsets[i + 1]; ++k) {
    const T w = static_cast<T>(values[k]);
    const T* src = x.data() + static_cast<std::size_t>(columns[k]) * width;
    for (std::size_t c = 0; c < width; ++c) dst[c] += w * src[c];
  }
}

template <class T>
[[gnu::noinline]] void gemm_row(const T* arow, std::size_t inner, const Matrix<T>& b, T* dst) {
  const std::size_t width = b.cols();
  std::fill(dst, dst + width, T{0});
  for (std::size_t k = 0; k < inner; ++k) {
    const T s = arow[k];
    if (s == T{0}) continue;
    const T* brow = b.data() + k * width;
    for (std::size_t c = 0; c < width; ++c) dst[c] += s * brow[c];
  }
}

}  // namespace

template <class T>
void spmm_rows(const NormalizedAdjacency& a, const Matrix<T>& x, Matrix<T>& out,
               std::size_t begin, std::size_t end) {
  check(a.node_count() == x.rows(), "spmm: adjacency and feature rows differ");
  check(out.rows() == x.rows() && out.cols() == x.cols(), "spmm_rows: output not pre-sized");
  const std::size_t width = x.cols();
  const auto first = static_cast<std::int64_t>(begin);
  const auto last = static_cast<std::int64_t>(end);
#pragma omp parallel for schedule(static) if (last - first >= kParallelRows)
  for (std::int64_t i = first; i < last; ++i) {
    spmm_row(a, x, out.data() + i * width, static_cast<std::size_t>(i));
  }
}

template <class T>
void spmm(const NormalizedAdjacency& a, const Matrix<T>& x, Matrix<T>& out) {
  out.resize(x.rows(), x.cols());
  spmm_rows(a, x, out, 0, x.rows());
}

template <class T>
void gemm_rows(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out, std::size_t begin,
               std::size_t end) {
  check(a.cols() == b.rows(), "gemm: inner dimensions differ");
  check(out.rows() == a.rows() && out.cols() == b.cols(), "gemm_rows: output not pre-sized");
  const std::size_t inner = a.cols();
  const std::size_t width = b.cols();
  const auto first = static_cast<std::int64_t>(begin);
  const auto last = static_cast<std::int64_t>(end);
#pragma omp parallel for schedule(static) if (last - first >= kParallelRows)
  for (std::int64_t i = first; i < last; ++i) {
    gemm_row(a.data() + i * inner, inner, b, out.data() + i * width);
  }
}

template <class T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  check(a.cols() == b.rows(), "gemm: inner dimensions differ");
  out.resize(a.rows(), b.cols());
  gemm_rows(a, b, out, 0, a.rows());
}

template <class T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  check(a.rows() == b.rows(), "gemm_tn: row counts differ");
  out.resize(a.cols(), b.cols());
  const std::size_t inner = a.rows();
  const std::size_t acols = a.cols();
  const std::size_t width = b.cols();
  const auto rows = static_cast<std::int64_t>(acols);
#pragma omp parallel for schedule(static) if (rows >= kParallelRows)
  for (std::int64_t i = 0; i < rows; ++i) {
    T* dst = out.data() + i * width;
    std::fill(dst, dst + width, T{0});
    for (std::size_t k = 0; k < inner; ++k) {
      const T s = a.data()[k * acols + i];
      if (s == T{0}) continue;
      const T* brow = b.data() + k * width;
      for (std::size_t c = 0; c < width; ++c) dst[c] += s * brow[c];
    }
  }
}

template <class T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  check(a.cols() == b.cols(), "gemm_nt: column counts differ");
  Matrix<T> bt(b.cols(), b.rows());
  for (std::size_t r = 0; r < b.rows(); ++r) {
    for (std::size_t c = 0; c < b.cols(); ++c) bt(c, r) = b(r, c);
  }
  gemm(a, bt, out);
}

#define GERN_INSTANTIATE(T)                                                          \
  template void spmm_rows<T>(const NormalizedAdjacency&, const Matrix<T>&, Matrix<T>&,     \
                             std::size_t, std::size_t);                                    \
  template void gemm_rows<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&, std::size_t,  \
                             std::size_t);                                                 \
  template void spmm<T>(const NormalizedAdjacency&, const Matrix<T>&, Matrix<T>&); \
  template void gemm<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);           \
  template void gemm_tn<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);        \
  template void gemm_nt<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);

GERN_INSTANTIATE(float)
GERN_INSTANTIATE(double)
#undef GERN_INSTANTIATE

}  // namespace omp
}  // namespace gern::kernels
