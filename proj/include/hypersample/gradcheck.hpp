#pragma once

#include <functional>
#include <span>
#include <vector>

#include "hypersample/matrix.hpp"
#include "hypersample/tape.hpp"

namespace hypersample {

/// Builds a scalar loss on `tape` from parameters already registered as leaves.
using LossBuilder = std::function<Var(Tape& tape, std::span<const Var> params)>;

/// Tape gradients of the loss with respect to each parameter.
std::vector<Matrix> tape_gradients(const LossBuilder& loss, const std::vector<Matrix>& params);

/// Loss value only.
double evaluate_loss(const LossBuilder& loss, const std::vector<Matrix>& params);

/// Compares tape gradients against central differences and returns
/// max over coordinates of |a - b| / max(1e-12, |a| + |b|).
double finite_difference_check(const LossBuilder& loss, const std::vector<Matrix>& params, double h = 1e-6);

/// Same, against caller-supplied gradients (used to verify the checker).
double finite_difference_check(const LossBuilder& loss, const std::vector<Matrix>& params,
                               std::span<const Matrix> analytic, double h = 1e-6);

}  // namespace hypersample
