// faultmap/core.hpp
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//  http://www.apache.org/licenses/LICENSE-2.0
//
// THIS CODE IS PROVIDED *AS IS* BASIS, WITHOUT WARRANTIES OR CONDITIONS OF ANY
// KIND, EITHER EXPRESS OR IMPLIED, INCLUDING WITHOUT LIMITATION ANY IMPLIED
// WARRANTIES OR CONDITIONS OF TITLE, FITNESS FOR A PARTICULAR PURPOSE,
// MERCHANTABLITY OR NON-INFRINGEMENT.
// See the Apache 2 License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <atomic>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace faultmap {

/// Precondition or configuration violation. Maps to CLI exit code 2.
class invalid_argument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed or unreadable input data. Maps to CLI exit code 3.
class io_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Numerical failure: non-convergence, non-finite values, degenerate data.
/// Maps to CLI exit code 4.
class numeric_error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

namespace detail {

inline std::atomic<std::size_t>& peak_alloc_elements() {
  static std::atomic<std::size_t> peak{0};
  return peak;
}

inline void note_matrix_alloc(std::size_t elements) {
  auto& peak = peak_alloc_elements();
  std::size_t seen = peak.load(std::memory_order_relaxed);
  while (seen < elements &&
         !peak.compare_exchange_weak(seen, elements, std::memory_order_relaxed)) {
  }
}

}  // namespace detail

/// High-water mark of the largest single Matrix allocation, in elements.
/// Lets tests assert that a code path never materializes an n-by-n buffer.
struct MatrixAllocStats {
  static void reset() { detail::peak_alloc_elements().store(0, std::memory_order_relaxed); }
  static std::size_t peak_elements() {
    return detail::peak_alloc_elements().load(std::memory_order_relaxed);
  }
};

/// Dense row-major matrix of doubles.
class Matrix {
 public:
  Matrix() = default;

  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {
    detail::note_matrix_alloc(rows * cols);
  }

  static Matrix identity(std::size_t n) {
    Matrix m(n, n, 0.0);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return data_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> row(std::size_t i) { return {data_.data() + i * cols_, cols_}; }
  std::span<const double> row(std::size_t i) const {
    return {data_.data() + i * cols_, cols_};
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  bool all_finite() const {
    for (double v : data_)
      if (!std::isfinite(v)) return false;
    return true;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

inline Matrix transpose(const Matrix& a) {
  Matrix t(a.cols(), a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
  return t;
}

/// C = A * B.
inline Matrix matmul(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows())
    throw invalid_argument("matmul: inner dimensions disagree (" +
                           std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + ")");
  Matrix c(a.rows(), b.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      const auto brow = b.row(k);
      auto crow = c.row(i);
      for (std::size_t j = 0; j < b.cols(); ++j) crow[j] += aik * brow[j];
    }
  }
  return c;
}

/// C = A^T * A, accumulated column-by-column. Result is symmetric.
inline Matrix gram_of_columns(const Matrix& a) {
  Matrix c(a.cols(), a.cols(), 0.0);
  for (std::size_t r = 0; r < a.rows(); ++r) {
    const auto row = a.row(r);
    for (std::size_t i = 0; i < a.cols(); ++i) {
      const double v = row[i];
      if (v == 0.0) continue;
      auto crow = c.row(i);
      for (std::size_t j = i; j < a.cols(); ++j) crow[j] += v * row[j];
    }
  }
  for (std::size_t i = 0; i < c.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) c(i, j) = c(j, i);
  return c;
}

/// Shortest decimal form that parses back to the same double. Locale-free
/// and deterministic, so repeated runs emit byte-identical files.
inline std::string format_double(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

/// n observations by d features, the currency every module trades in.
/// Construction rejects non-finite entries and empty shapes.
struct FeatureMatrix {
  Matrix values;
  std::vector<std::string> column_names;  // empty, or one name per column

  FeatureMatrix() = default;

  explicit FeatureMatrix(Matrix m, std::vector<std::string> names = {})
      : values(std::move(m)), column_names(std::move(names)) {
    if (values.rows() < 1 || values.cols() < 1)
      throw invalid_argument("FeatureMatrix: need at least 1 row and 1 column");
    if (!values.all_finite())
      throw invalid_argument("FeatureMatrix: non-finite entry rejected");
    if (!column_names.empty() && column_names.size() != values.cols())
      throw invalid_argument("FeatureMatrix: column_names size must equal column count");
  }

  std::size_t n() const { return values.rows(); }
  std::size_t d() const { return values.cols(); }
};

}  // namespace faultmap
