#pragma once

#include <span>
#include <vector>

#include "hypersample/matrix.hpp"

namespace hypersample {

struct AdamConfig {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // L2 term added to the gradient
};

/// Adam with bias correction. Moments are shaped after the parameters passed
/// at construction; every step must present the same shapes.
class Adam {
 public:
  Adam() = default;
  Adam(AdamConfig cfg, std::span<const Matrix> params);

  void step(std::span<Matrix* const> params, std::span<const Matrix> grads);

  const AdamConfig& config() const noexcept { return cfg_; }
  std::size_t steps() const noexcept { return t_; }
  const std::vector<Matrix>& first_moments() const noexcept { return m_; }
  const std::vector<Matrix>& second_moments() const noexcept { return v_; }

 private:
  AdamConfig cfg_;
  std::size_t t_ = 0;
  std::vector<Matrix> m_;
  std::vector<Matrix> v_;
};

}  // namespace hypersample
