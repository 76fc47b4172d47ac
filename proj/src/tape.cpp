#include "hypersample/tape.hpp"

#include <string>

namespace hypersample {

Var Tape::leaf(Matrix value) {
  if (!all_finite(value)) throw NumericError("non-finite value in trainable input");
  nodes_.push_back({std::move(value), {}, false, true, {}});
  return {nodes_.size() - 1};
}

Var Tape::constant(Matrix value) {
  if (!all_finite(value)) throw NumericError("non-finite value in constant input");
  nodes_.push_back({std::move(value), {}, false, false, {}});
  return {nodes_.size() - 1};
}

Var Tape::record(Matrix value, bool needs_grad, Backward fn, const char* op_name) {
  if (!all_finite(value)) throw NumericError(std::string("non-finite result from ") + op_name);
  nodes_.push_back({std::move(value), {}, false, needs_grad, needs_grad ? std::move(fn) : Backward{}});
  return {nodes_.size() - 1};
}

Matrix Tape::grad(Var v) const {
  const Node& n = nodes_.at(v.id);
  if (n.has_grad) return n.grad;
  return Matrix(n.value.rows(), n.value.cols());
}

Matrix& Tape::grad_buffer(Var v) {
  Node& n = nodes_.at(v.id);
  if (!n.has_grad) {
    n.grad = Matrix(n.value.rows(), n.value.cols());
    n.has_grad = true;
  }
  return n.grad;
}

void Tape::backward(Var loss) {
  const Matrix& lv = value(loss);
  if (lv.rows() != 1 || lv.cols() != 1) throw ShapeError("backward: loss must be 1x1, got " + shape_string(lv));
  grad_buffer(loss)(0, 0) += 1.0;
  for (std::size_t i = loss.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.has_grad || !n.backward) continue;
    // Inputs always precede their consumer and nodes_ does not grow here,
    // so the reference stays valid while the callback updates earlier nodes.
    n.backward(*this, n.grad);
  }
}

}  // namespace hypersample
