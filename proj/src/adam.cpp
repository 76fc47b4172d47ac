#include "hypersample/adam.hpp"

#include <cmath>
#include <string>

namespace hypersample {

Adam::Adam(AdamConfig cfg, std::span<const Matrix> params) : cfg_(cfg) {
  m_.reserve(params.size());
  v_.reserve(params.size());
  for (const Matrix& p : params) {
    m_.emplace_back(p.rows(), p.cols());
    v_.emplace_back(p.rows(), p.cols());
  }
}

void Adam::step(std::span<Matrix* const> params, std::span<const Matrix> grads) {
  if (params.size() != m_.size() || grads.size() != m_.size()) {
    throw ShapeError("adam: expected " + std::to_string(m_.size()) + " parameters, got " +
                     std::to_string(params.size()) + " params / " + std::to_string(grads.size()) + " grads");
  }
  for (std::size_t i = 0; i < m_.size(); ++i) {
    if (!params[i]->same_shape(m_[i]) || !grads[i].same_shape(m_[i])) {
      throw ShapeError("adam: shape mismatch at parameter " + std::to_string(i));
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  for (std::size_t i = 0; i < m_.size(); ++i) {
    double* p = params[i]->data();
    const double* g = grads[i].data();
    double* m = m_[i].data();
    double* v = v_[i].data();
    for (std::size_t j = 0; j < m_[i].size(); ++j) {
      const double gj = g[j] + cfg_.weight_decay * p[j];
      m[j] = cfg_.beta1 * m[j] + (1.0 - cfg_.beta1) * gj;
      v[j] = cfg_.beta2 * v[j] + (1.0 - cfg_.beta2) * gj * gj;
      const double mhat = m[j] / c1;
      const double vhat = v[j] / c2;
      p[j] -= cfg_.lr * mhat / (std::sqrt(vhat) + cfg_.eps);
    }
  }
}

}  // namespace hypersample
