#include "hypersample/matrix.hpp"

#include <algorithm>
#include <cmath>

namespace hypersample {

Matrix to_double(const FeatureMatrix& m) {
  Matrix out(m.rows(), m.cols());
  std::copy(m.values().begin(), m.values().end(), out.values().begin());
  return out;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) throw ShapeError("max_abs_diff: " + shape_string(a) + " vs " + shape_string(b));
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) worst = std::max(worst, std::abs(a.data()[i] - b.data()[i]));
  return worst;
}

bool all_finite(const Matrix& m) noexcept {
  return std::all_of(m.values().begin(), m.values().end(), [](double v) { return std::isfinite(v); });
}

std::string shape_string(const Matrix& m) {
  return "(" + std::to_string(m.rows()) + "x" + std::to_string(m.cols()) + ")";
}

Matrix sparse_multiply(const SparseRows& s, const Matrix& x) {
  if (s.num_cols != x.rows()) {
    throw ShapeError("sparse_multiply: operator expects " + std::to_string(s.num_cols) + " input rows, got " +
                     std::to_string(x.rows()));
  }
  const std::size_t d = x.cols();
  Matrix out(s.rows(), d);
  for (std::size_t i = 0; i < s.rows(); ++i) {
    double* dst = out.data() + i * d;
    for (std::size_t j = s.offsets[i]; j < s.offsets[i + 1]; ++j) {
      const double w = s.weights[j];
      const double* src = x.data() + static_cast<std::size_t>(s.cols[j]) * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += w * src[c];
    }
  }
  return out;
}

Matrix to_dense(const SparseRows& s) {
  Matrix out(s.rows(), s.num_cols);
  for (std::size_t i = 0; i < s.rows(); ++i)
    for (std::size_t j = s.offsets[i]; j < s.offsets[i + 1]; ++j) out(i, s.cols[j]) += s.weights[j];
  return out;
}

}  // namespace hypersample
