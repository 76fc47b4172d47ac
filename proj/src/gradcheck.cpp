#include "hypersample/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace hypersample {
namespace {

double loss_value(const LossBuilder& loss, const std::vector<Matrix>& params, std::vector<Matrix>* grads) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(params.size());
  for (const Matrix& p : params) vars.push_back(tape.leaf(p));
  const Var out = loss(tape, vars);
  const Matrix& v = tape.value(out);
  if (v.rows() != 1 || v.cols() != 1) throw ShapeError("loss builder must return a 1x1 value");
  const double value = v(0, 0);
  if (!std::isfinite(value)) throw NumericError("non-finite loss in gradient check");
  if (grads != nullptr) {
    tape.backward(out);
    grads->clear();
    for (Var p : vars) grads->push_back(tape.grad(p));
  }
  return value;
}

}  // namespace

std::vector<Matrix> tape_gradients(const LossBuilder& loss, const std::vector<Matrix>& params) {
  std::vector<Matrix> grads;
  loss_value(loss, params, &grads);
  return grads;
}

double evaluate_loss(const LossBuilder& loss, const std::vector<Matrix>& params) {
  return loss_value(loss, params, nullptr);
}

double finite_difference_check(const LossBuilder& loss, const std::vector<Matrix>& params, double h) {
  const std::vector<Matrix> grads = tape_gradients(loss, params);
  return finite_difference_check(loss, params, grads, h);
}

double finite_difference_check(const LossBuilder& loss, const std::vector<Matrix>& params,
                               std::span<const Matrix> analytic, double h) {
  if (analytic.size() != params.size()) throw ShapeError("gradient count does not match parameter count");
  std::vector<Matrix> probe = params;
  double worst = 0.0;
  for (std::size_t i = 0; i < probe.size(); ++i) {
    if (!analytic[i].same_shape(probe[i])) throw ShapeError("gradient shape mismatch");
    for (std::size_t j = 0; j < probe[i].size(); ++j) {
      const double orig = probe[i].data()[j];
      probe[i].data()[j] = orig + h;
      const double up = loss_value(loss, probe, nullptr);
      probe[i].data()[j] = orig - h;
      const double down = loss_value(loss, probe, nullptr);
      probe[i].data()[j] = orig;
      const double numeric = (up - down) / (2.0 * h);
      const double a = analytic[i].data()[j];
      worst = std::max(worst, std::abs(a - numeric) / std::max(1e-12, std::abs(a) + std::abs(numeric)));
    }
  }
  return worst;
}

}  // namespace hypersample
