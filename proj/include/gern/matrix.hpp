#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "gern/error.hpp"

namespace gern {

/// Dense row-major matrix.
template <class T>
class Matrix {
 public:
  using value_type = T;

  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), values_(rows * cols, fill) {}
  Matrix(std::size_t rows, std::size_t cols, std::vector<T> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw Error(ErrorKind::ShapeMismatch, "value count does not match rows * cols");
    }
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return values_.size(); }
  bool empty() const noexcept { return values_.empty(); }

  T& operator()(std::size_t i, std::size_t j) noexcept { return values_[i * cols_ + j]; }
  T operator()(std::size_t i, std::size_t j) const noexcept { return values_[i * cols_ + j]; }

  std::span<T> row(std::size_t i) noexcept { return {values_.data() + i * cols_, cols_}; }
  std::span<const T> row(std::size_t i) const noexcept {
    return {values_.data() + i * cols_, cols_};
  }

  T* data() noexcept { return values_.data(); }
  const T* data() const noexcept { return values_.data(); }
  std::span<T> values() noexcept { return values_; }
  std::span<const T> values() const noexcept { return values_; }

  void fill(T value) { std::fill(values_.begin(), values_.end(), value); }

  /// Reshape without touching values; contents are unspecified afterwards.
  void resize(std::size_t rows, std::size_t cols) {
    rows_ = rows;
    cols_ = cols;
    values_.resize(rows * cols);
  }

  template <class U>
  Matrix<U> cast() const {
    Matrix<U> out(rows_, cols_);
    for (std::size_t k = 0; k < values_.size(); ++k) out.values()[k] = static_cast<U>(values_[k]);
    return out;
  }

  bool all_finite() const noexcept {
    for (T v : values_) {
      if (!std::isfinite(v)) return false;
    }
    return true;
  }

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> values_;
};

/// Rows `nodes` of `source`, in that order.
template <class T>
Matrix<T> gather_rows(const Matrix<T>& source, std::span<const std::uint32_t> nodes) {
  Matrix<T> out(nodes.size(), source.cols());
  for (std::size_t r = 0; r < nodes.size(); ++r) {
    const auto src = source.row(nodes[r]);
    std::copy(src.begin(), src.end(), out.row(r).begin());
  }
  return out;
}

}  // namespace gern
