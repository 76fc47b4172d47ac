#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

#include "hypersample/error.hpp"

namespace hypersample {

/// Dense row-major matrix.
template <typename T>
class BasicMatrix {
 public:
  using value_type = T;

  BasicMatrix() = default;
  BasicMatrix(std::size_t rows, std::size_t cols, T fill = T{})
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  BasicMatrix(std::size_t rows, std::size_t cols, std::vector<T> data)
      : rows_(rows), cols_(cols), data_(std::move(data)) {
    if (data_.size() != rows_ * cols_) throw ShapeError("matrix data length does not match rows*cols");
  }

  static BasicMatrix from_rows(std::initializer_list<std::initializer_list<T>> rows) {
    BasicMatrix m;
    m.rows_ = rows.size();
    m.cols_ = rows.size() == 0 ? 0 : rows.begin()->size();
    m.data_.reserve(m.rows_ * m.cols_);
    for (const auto& r : rows) {
      if (r.size() != m.cols_) throw ShapeError("ragged row list");
      m.data_.insert(m.data_.end(), r.begin(), r.end());
    }
    return m;
  }

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  T& operator()(std::size_t r, std::size_t c) noexcept { return data_[r * cols_ + c]; }
  const T& operator()(std::size_t r, std::size_t c) const noexcept { return data_[r * cols_ + c]; }

  std::span<T> row(std::size_t r) noexcept { return {data_.data() + r * cols_, cols_}; }
  std::span<const T> row(std::size_t r) const noexcept { return {data_.data() + r * cols_, cols_}; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  T* data() noexcept { return data_.data(); }
  const T* data() const noexcept { return data_.data(); }

  bool same_shape(const BasicMatrix& o) const noexcept { return rows_ == o.rows_ && cols_ == o.cols_; }

  friend bool operator==(const BasicMatrix& a, const BasicMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<T> data_;
};

using Matrix = BasicMatrix<double>;
using FeatureMatrix = BasicMatrix<float>;

Matrix to_double(const FeatureMatrix& m);

/// Largest |a - b| over entries; throws ShapeError on mismatch.
double max_abs_diff(const Matrix& a, const Matrix& b);

bool all_finite(const Matrix& m) noexcept;

std::string shape_string(const Matrix& m);

/// Weighted sparse rows: row i gathers `weights[j] * input[cols[j]]` for j in
/// [offsets[i], offsets[i+1]). Used for neighbor aggregation, feature
/// projection and back-projection alike.
struct SparseRows {
  std::vector<std::size_t> offsets{0};
  std::vector<std::uint32_t> cols;
  std::vector<double> weights;
  std::size_t num_cols = 0;

  std::size_t rows() const noexcept { return offsets.size() - 1; }
  std::size_t nnz() const noexcept { return cols.size(); }

  void push(std::uint32_t col, double w) {
    cols.push_back(col);
    weights.push_back(w);
  }
  void finish_row() { offsets.push_back(cols.size()); }
};

/// out = S * x, rows summed in stored order.
Matrix sparse_multiply(const SparseRows& s, const Matrix& x);

/// Dense copy of S, for oracles.
Matrix to_dense(const SparseRows& s);

}  // namespace hypersample
