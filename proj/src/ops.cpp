#include "hypersample/ops.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <string>
#include <vector>

namespace hypersample::ops {
namespace {

// `detail` is only evaluated on failure.
template <class Detail>
void require(bool ok, const char* op, Detail&& detail) {
  if (!ok) throw ShapeError(std::string(op) + ": " + std::string(detail()));
}

// c += a * b with four output rows per pass so each row of b is loaded once
// per block. Every c(i, j) still accumulates over p in ascending order.
void gemm_nn_raw(const double* a, const double* b, double* c, std::size_t n, std::size_t k, std::size_t m) {
  std::size_t i = 0;
  for (; i + 4 <= n; i += 4) {
    double* c0 = c + i * m;
    double* c1 = c0 + m;
    double* c2 = c1 + m;
    double* c3 = c2 + m;
    const double* a0 = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double x0 = a0[p], x1 = a0[k + p], x2 = a0[2 * k + p], x3 = a0[3 * k + p];
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) {
        const double bv = bp[j];
        c0[j] += x0 * bv;
        c1[j] += x1 * bv;
        c2[j] += x2 * bv;
        c3[j] += x3 * bv;
      }
    }
  }
  for (; i < n; ++i) {
    double* ci = c + i * m;
    const double* ai = a + i * k;
    for (std::size_t p = 0; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      const double* bp = b + p * m;
      for (std::size_t j = 0; j < m; ++j) ci[j] += av * bp[j];
    }
  }
}

void gemm_nn(const Matrix& a, const Matrix& b, Matrix& c) {
  gemm_nn_raw(a.data(), b.data(), c.data(), a.rows(), a.cols(), b.cols());
}

// c += a * b^T. A strided dot product does not vectorize in strict IEEE
// order, so b is transposed once and the row-streaming kernel is reused.
void gemm_nt(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t k = a.cols(), m = b.rows();
  std::vector<double> bt(k * m);
  for (std::size_t j = 0; j < m; ++j)
    for (std::size_t p = 0; p < k; ++p) bt[p * m + j] = b(j, p);
  gemm_nn_raw(a.data(), bt.data(), c.data(), a.rows(), k, m);
}

// c += a^T * b, four rows of c per pass. Each c(p, j) accumulates over the
// rows of a in ascending order.
void gemm_tn(const Matrix& a, const Matrix& b, Matrix& c) {
  const std::size_t n = a.rows(), k = a.cols(), m = b.cols();
  for (std::size_t i = 0; i < n; ++i) {
    const double* ai = a.data() + i * k;
    const double* bi = b.data() + i * m;
    std::size_t p = 0;
    for (; p + 4 <= k; p += 4) {
      const double x0 = ai[p], x1 = ai[p + 1], x2 = ai[p + 2], x3 = ai[p + 3];
      double* c0 = c.data() + p * m;
      double* c1 = c0 + m;
      double* c2 = c1 + m;
      double* c3 = c2 + m;
      for (std::size_t j = 0; j < m; ++j) {
        const double bv = bi[j];
        c0[j] += x0 * bv;
        c1[j] += x1 * bv;
        c2[j] += x2 * bv;
        c3[j] += x3 * bv;
      }
    }
    for (; p < k; ++p) {
      const double av = ai[p];
      if (av == 0.0) continue;
      double* cp = c.data() + p * m;
      for (std::size_t j = 0; j < m; ++j) cp[j] += av * bi[j];
    }
  }
}

void accumulate(Matrix& dst, const Matrix& src) {
  for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
}

}  // namespace

double sigmoid(double z) {
  if (z >= 0) return 1.0 / (1.0 + std::exp(-z));
  const double e = std::exp(z);
  return e / (1.0 + e);
}

double log_sigmoid(double z) { return -(std::max(-z, 0.0) + std::log1p(std::exp(-std::abs(z)))); }

double log_one_minus_sigmoid(double z) { return -(std::max(z, 0.0) + std::log1p(std::exp(-std::abs(z)))); }

Matrix matmul(const Matrix& a, const Matrix& b) {
  require(a.cols() == b.rows(), "matmul", [&] { return shape_string(a) + " * " + shape_string(b); });
  Matrix c(a.rows(), b.cols());
  gemm_nn(a, b, c);
  return c;
}

void add_bias_inplace(Matrix& x, const Matrix& bias) {
  require(bias.rows() == 1 && bias.cols() == x.cols(), "add_bias", [&] { return shape_string(x) + " + " + shape_string(bias); });
  for (std::size_t i = 0; i < x.rows(); ++i) {
    auto r = x.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += bias(0, j);
  }
}

void relu_inplace(Matrix& x) {
  for (double& v : x.values()) v = v > 0.0 ? v : 0.0;
}

Var matmul(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  Matrix out = matmul(av, bv);
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.record(std::move(out), ng,
                  [a, b](Tape& tp, const Matrix& g) {
                    if (tp.needs_grad(a)) gemm_nt(g, tp.value(b), tp.grad_buffer(a));
                    if (tp.needs_grad(b)) gemm_tn(tp.value(a), g, tp.grad_buffer(b));
                  },
                  "matmul");
}

Var add_bias(Tape& t, Var x, Var bias) {
  Matrix out = t.value(x);
  add_bias_inplace(out, t.value(bias));
  const bool ng = t.needs_grad(x) || t.needs_grad(bias);
  return t.record(std::move(out), ng,
                  [x, bias](Tape& tp, const Matrix& g) {
                    if (tp.needs_grad(x)) accumulate(tp.grad_buffer(x), g);
                    if (tp.needs_grad(bias)) {
                      Matrix& gb = tp.grad_buffer(bias);
                      for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
                    }
                  },
                  "add_bias");
}

Var relu(Tape& t, Var x) {
  Matrix out = t.value(x);
  relu_inplace(out);
  return t.record(std::move(out), t.needs_grad(x),
                  [x](Tape& tp, const Matrix& g) {
                    const Matrix& in = tp.value(x);
                    Matrix& gx = tp.grad_buffer(x);
                    for (std::size_t i = 0; i < g.size(); ++i)
                      if (in.data()[i] > 0.0) gx.data()[i] += g.data()[i];
                  },
                  "relu");
}

Var row_scale(Tape& t, Var x, std::vector<double> scales) {
  const Matrix& xv = t.value(x);
  require(scales.size() == xv.rows(), "row_scale", [&] { return std::to_string(scales.size()) + " scales for " + shape_string(xv); });
  Matrix out = xv;
  for (std::size_t i = 0; i < out.rows(); ++i)
    for (double& v : out.row(i)) v *= scales[i];
  return t.record(std::move(out), t.needs_grad(x),
                  [x, scales = std::move(scales)](Tape& tp, const Matrix& g) {
                    Matrix& gx = tp.grad_buffer(x);
                    for (std::size_t i = 0; i < g.rows(); ++i)
                      for (std::size_t j = 0; j < g.cols(); ++j) gx(i, j) += scales[i] * g(i, j);
                  },
                  "row_scale");
}

namespace {

void sparse_aggregate_backward(const SparseRows& s, const Matrix& g, Matrix& gx) {
  const std::size_t d = g.cols();
  for (std::size_t i = 0; i < s.rows(); ++i) {
    const double* gi = g.data() + i * d;
    for (std::size_t j = s.offsets[i]; j < s.offsets[i + 1]; ++j) {
      const double w = s.weights[j];
      double* dst = gx.data() + static_cast<std::size_t>(s.cols[j]) * d;
      for (std::size_t c = 0; c < d; ++c) dst[c] += w * gi[c];
    }
  }
}

}  // namespace

Var sparse_neighbor_aggregate(Tape& t, Var x, const SparseRows& s) {
  Matrix out = sparse_multiply(s, t.value(x));
  const SparseRows* sp = &s;
  return t.record(std::move(out), t.needs_grad(x),
                  [x, sp](Tape& tp, const Matrix& g) { sparse_aggregate_backward(*sp, g, tp.grad_buffer(x)); },
                  "sparse_neighbor_aggregate");
}

Var sparse_neighbor_aggregate(Tape& t, Var x, SparseRows&& s) {
  Matrix out = sparse_multiply(s, t.value(x));
  auto sp = std::make_shared<const SparseRows>(std::move(s));
  return t.record(std::move(out), t.needs_grad(x),
                  [x, sp](Tape& tp, const Matrix& g) { sparse_aggregate_backward(*sp, g, tp.grad_buffer(x)); },
                  "sparse_neighbor_aggregate");
}

Var concat_rows(Tape& t, std::span<const Var> parts) {
  require(!parts.empty(), "concat_rows", [&] { return "no inputs"; });
  const std::size_t cols = t.value(parts[0]).cols();
  std::size_t rows = 0;
  bool ng = false;
  for (Var p : parts) {
    require(t.value(p).cols() == cols, "concat_rows", [&] { return "column mismatch " + shape_string(t.value(p)); });
    rows += t.value(p).rows();
    ng = ng || t.needs_grad(p);
  }
  Matrix out(rows, cols);
  std::size_t r0 = 0;
  for (Var p : parts) {
    const Matrix& v = t.value(p);
    std::copy(v.values().begin(), v.values().end(), out.data() + r0 * cols);
    r0 += v.rows();
  }
  return t.record(std::move(out), ng,
                  [ids = std::vector<Var>(parts.begin(), parts.end())](Tape& tp, const Matrix& g) {
                    std::size_t r = 0;
                    for (Var p : ids) {
                      const std::size_t n = tp.value(p).rows();
                      if (tp.needs_grad(p)) {
                        Matrix& gp = tp.grad_buffer(p);
                        for (std::size_t i = 0; i < gp.size(); ++i) gp.data()[i] += g.data()[r * g.cols() + i];
                      }
                      r += n;
                    }
                  },
                  "concat_rows");
}

Var softmax_cross_entropy(Tape& t, Var logits, std::span<const std::uint32_t> labels) {
  const Matrix& z = t.value(logits);
  require(labels.size() == z.rows(), "softmax_cross_entropy",
          [&] { return std::to_string(labels.size()) + " labels for " + shape_string(z); });
  require(z.rows() > 0, "softmax_cross_entropy", [&] { return "empty batch"; });
  const std::size_t n = z.rows(), c = z.cols();
  Matrix probs(n, c);
  double total = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    require(labels[i] < c, "softmax_cross_entropy", [&] { return "label " + std::to_string(labels[i]) + " out of range"; });
    const auto row = z.row(i);
    const double m = *std::max_element(row.begin(), row.end());
    double s = 0.0;
    for (std::size_t j = 0; j < c; ++j) s += std::exp(row[j] - m);
    const double lse = m + std::log(s);
    for (std::size_t j = 0; j < c; ++j) probs(i, j) = std::exp(row[j] - lse);
    total += lse - row[labels[i]];
  }
  Matrix out(1, 1, total / static_cast<double>(n));
  return t.record(std::move(out), t.needs_grad(logits),
                  [logits, probs = std::move(probs), lab = std::vector<std::uint32_t>(labels.begin(), labels.end())](
                      Tape& tp, const Matrix& g) {
                    Matrix& gz = tp.grad_buffer(logits);
                    const double f = g(0, 0) / static_cast<double>(probs.rows());
                    for (std::size_t i = 0; i < probs.rows(); ++i) {
                      for (std::size_t j = 0; j < probs.cols(); ++j) {
                        const double onehot = j == lab[i] ? 1.0 : 0.0;
                        gz(i, j) += f * (probs(i, j) - onehot);
                      }
                    }
                  },
                  "softmax_cross_entropy");
}

Var add(Tape& t, Var a, Var b) {
  const Matrix& av = t.value(a);
  const Matrix& bv = t.value(b);
  require(av.same_shape(bv), "add", [&] { return shape_string(av) + " + " + shape_string(bv); });
  Matrix out = av;
  accumulate(out, bv);
  const bool ng = t.needs_grad(a) || t.needs_grad(b);
  return t.record(std::move(out), ng,
                  [a, b](Tape& tp, const Matrix& g) {
                    if (tp.needs_grad(a)) accumulate(tp.grad_buffer(a), g);
                    if (tp.needs_grad(b)) accumulate(tp.grad_buffer(b), g);
                  },
                  "add");
}

Var scale(Tape& t, Var x, double factor) {
  Matrix out = t.value(x);
  for (double& v : out.values()) v *= factor;
  return t.record(std::move(out), t.needs_grad(x),
                  [x, factor](Tape& tp, const Matrix& g) {
                    Matrix& gx = tp.grad_buffer(x);
                    for (std::size_t i = 0; i < g.size(); ++i) gx.data()[i] += factor * g.data()[i];
                  },
                  "scale");
}

Var add_constant(Tape& t, Var x, const Matrix& c) {
  const Matrix& xv = t.value(x);
  require(xv.same_shape(c), "add_constant", [&] { return shape_string(xv) + " + " + shape_string(c); });
  Matrix out = xv;
  accumulate(out, c);
  return t.record(std::move(out), t.needs_grad(x),
                  [x](Tape& tp, const Matrix& g) { accumulate(tp.grad_buffer(x), g); }, "add_constant");
}

Var bernoulli_log_prob(Tape& t, Var logits, std::span<const std::uint8_t> chosen,
                       std::span<const std::uint32_t> segment, std::size_t num_segments) {
  const Matrix& z = t.value(logits);
  require(z.cols() == 1, "bernoulli_log_prob", [&] { return "logits must be a column, got " + shape_string(z); });
  require(chosen.size() == z.rows() && segment.size() == z.rows(), "bernoulli_log_prob",
          [&] { return "mask/segment length mismatch"; });
  Matrix out(num_segments, 1);
  for (std::size_t i = 0; i < z.rows(); ++i) {
    require(segment[i] < num_segments, "bernoulli_log_prob", [&] { return "segment id out of range"; });
    out(segment[i], 0) += chosen[i] ? log_sigmoid(z(i, 0)) : log_one_minus_sigmoid(z(i, 0));
  }
  return t.record(std::move(out), t.needs_grad(logits),
                  [logits, ch = std::vector<std::uint8_t>(chosen.begin(), chosen.end()),
                   seg = std::vector<std::uint32_t>(segment.begin(), segment.end())](Tape& tp, const Matrix& g) {
                    const Matrix& zv = tp.value(logits);
                    Matrix& gz = tp.grad_buffer(logits);
                    for (std::size_t i = 0; i < zv.rows(); ++i) {
                      const double p = sigmoid(zv(i, 0));
                      const double d = ch[i] ? 1.0 - p : -p;
                      gz(i, 0) += g(seg[i], 0) * d;
                    }
                  },
                  "bernoulli_log_prob");
}

Var variance(Tape& t, Var x) {
  const Matrix& xv = t.value(x);
  require(xv.cols() == 1 && xv.rows() > 0, "variance", [&] { return "expects a nonempty column, got " + shape_string(xv); });
  const auto n = static_cast<double>(xv.rows());
  double mean = 0.0;
  for (double v : xv.values()) mean += v;
  mean /= n;
  double s = 0.0;
  for (double v : xv.values()) s += (v - mean) * (v - mean);
  Matrix out(1, 1, s / n);
  return t.record(std::move(out), t.needs_grad(x),
                  [x, mean, n](Tape& tp, const Matrix& g) {
                    const Matrix& v = tp.value(x);
                    Matrix& gx = tp.grad_buffer(x);
                    for (std::size_t i = 0; i < v.rows(); ++i) gx(i, 0) += g(0, 0) * 2.0 * (v(i, 0) - mean) / n;
                  },
                  "variance");
}

Var mean_square(Tape& t, Var x) {
  const Matrix& xv = t.value(x);
  require(xv.size() > 0, "mean_square", [&] { return "empty input"; });
  const auto n = static_cast<double>(xv.size());
  double s = 0.0;
  for (double v : xv.values()) s += v * v;
  Matrix out(1, 1, s / n);
  return t.record(std::move(out), t.needs_grad(x),
                  [x, n](Tape& tp, const Matrix& g) {
                    const Matrix& v = tp.value(x);
                    Matrix& gx = tp.grad_buffer(x);
                    for (std::size_t i = 0; i < v.size(); ++i) gx.data()[i] += g(0, 0) * 2.0 * v.data()[i] / n;
                  },
                  "mean_square");
}

}  // namespace hypersample::ops
