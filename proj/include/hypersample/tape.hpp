#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "hypersample/matrix.hpp"

namespace hypersample {

class Tape;

/// Handle to a value recorded on a Tape.
struct Var {
  std::size_t id = static_cast<std::size_t>(-1);
};

/// Reverse-mode recording of the fixed primitive set in ops.hpp.
///
/// Values are appended in evaluation order; backward() walks the records in
/// exact reverse order and each record adds its contribution into the
/// gradients of its inputs. Gradient buffers are allocated on first touch.
class Tape {
 public:
  using Backward = std::function<void(Tape&, const Matrix& out_grad)>;

  /// Trainable input. Throws NumericError on non-finite entries.
  Var leaf(Matrix value);
  /// Input that never receives a gradient.
  Var constant(Matrix value);
  /// Result of a primitive. `fn` may be empty when no input needs a gradient.
  Var record(Matrix value, bool needs_grad, Backward fn, const char* op_name);

  const Matrix& value(Var v) const { return nodes_.at(v.id).value; }
  bool needs_grad(Var v) const { return nodes_.at(v.id).needs_grad; }

  /// Gradient accumulated so far; a zero matrix of the value's shape if none.
  Matrix grad(Var v) const;
  /// Mutable accumulator used by backward functions.
  Matrix& grad_buffer(Var v);

  /// Seeds d(loss)/d(loss) = 1 and propagates. `loss` must be 1x1.
  void backward(Var loss);

  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    Matrix grad;
    bool has_grad = false;
    bool needs_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace hypersample
