#include "gern/kernels.hpp"

namespace gern::kernels::serial {

namespace {

template <class T>
void check(bool ok, const char* what) {
  if (!ok) throw Error(ErrorKind::ShapeMismatch, what);
}

}  // namespace

template <class T>
void spmm(const NormalizedAdjacency& a, const Matrix<T>& x, Matrix<T>& out) {
  check<T>(a.node_count() == x.rows(), "spmm: adjacency and feature rows differ");
  out.resize(x.rows(), x.cols());
  const auto offsets = a.offsets();
  const auto columns = a.columns();
  const auto values = a.values();
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t c = 0; c < x.cols(); ++c) {
      T acc = T{0};
      for (std::uint32_t k = offsets[i]; k < offsets[i + 1]; ++k) {
        acc += static_cast<T>(values[k]) * x(columns[k], c);
      }
      out(i, c) = acc;
    }
  }
}

template <class T>
void gemm(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  check<T>(a.cols() == b.rows(), "gemm: inner dimensions differ");
  out.resize(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      T acc = T{0};
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(k, j);
      out(i, j) = acc;
    }
  }
}

template <class T>
void gemm_tn(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  check<T>(a.rows() == b.rows(), "gemm_tn: row counts differ");
  out.resize(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      T acc = T{0};
      for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, i) * b(k, j);
      out(i, j) = acc;
    }
  }
}

template <class T>
void gemm_nt(const Matrix<T>& a, const Matrix<T>& b, Matrix<T>& out) {
  check<T>(a.cols() == b.cols(), "gemm_nt: column counts differ");
  out.resize(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.rows(); ++j) {
      T acc = T{0};
      for (std::size_t k = 0; k < a.cols(); ++k) acc += a(i, k) * b(j, k);
      out(i, j) = acc;
    }
  }
}

#define GERN_INSTANTIATE(T)                                                          \
  template void spmm<T>(const NormalizedAdjacency&, const Matrix<T>&, Matrix<T>&); \
  template void gemm<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);           \
  template void gemm_tn<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);        \
  template void gemm_nt<T>(const Matrix<T>&, const Matrix<T>&, Matrix<T>&);

GERN_INSTANTIATE(float)
GERN_INSTANTIATE(double)
#undef GERN_INSTANTIATE

}  // namespace gern::kernels::serial
