#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "hypersample/matrix.hpp"
#include "hypersample/tape.hpp"

// Differentiable primitives. Every reduction runs in a fixed left-to-right
// order, so identical inputs give bitwise-identical values and gradients.
namespace hypersample::ops {

Var matmul(Tape& t, Var a, Var b);

/// x (n x d) + bias (1 x d) broadcast over rows.
Var add_bias(Tape& t, Var x, Var bias);

/// max(x, 0). The gradient at exactly 0 is 0.
Var relu(Tape& t, Var x);

/// Row i multiplied by scales[i] (constant).
Var row_scale(Tape& t, Var x, std::vector<double> scales);

/// out = S * x for the weighted sparse rows S. `s` must outlive the
/// backward pass of `t`.
Var sparse_neighbor_aggregate(Tape& t, Var x, const SparseRows& s);
/// Same, with the tape owning S.
Var sparse_neighbor_aggregate(Tape& t, Var x, SparseRows&& s);

/// Stacks inputs vertically; all must share the column count.
Var concat_rows(Tape& t, std::span<const Var> parts);

/// Mean over rows of -log softmax(logits)[label]. Returns 1x1.
Var softmax_cross_entropy(Tape& t, Var logits, std::span<const std::uint32_t> labels);

Var add(Tape& t, Var a, Var b);
Var scale(Tape& t, Var x, double factor);
/// x + c for a constant matrix c of the same shape.
Var add_constant(Tape& t, Var x, const Matrix& c);

/// Factorized Bernoulli log-likelihood of a selection. `logits` is n x 1 with
/// p_i = logistic(logits_i); row i contributes log p_i if chosen[i] and
/// log(1 - p_i) otherwise, summed into segment[i]. Returns num_segments x 1.
Var bernoulli_log_prob(Tape& t, Var logits, std::span<const std::uint8_t> chosen,
                       std::span<const std::uint32_t> segment, std::size_t num_segments);

/// Population variance of an n x 1 column: mean((x - mean(x))^2). Returns 1x1.
Var variance(Tape& t, Var x);

/// Mean of squared entries. Returns 1x1.
Var mean_square(Tape& t, Var x);

// Plain (untaped) kernels shared with the forward-only code paths.
Matrix matmul(const Matrix& a, const Matrix& b);
void add_bias_inplace(Matrix& x, const Matrix& bias);
void relu_inplace(Matrix& x);

/// log(logistic(z)) and log(1 - logistic(z)) without overflow.
double log_sigmoid(double z);
double log_one_minus_sigmoid(double z);
double sigmoid(double z);

}  // namespace hypersample::ops
