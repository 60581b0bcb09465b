#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "dsn/autodiff/tensor.hpp"

namespace dsn::train {

struct AdamConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

// Bias-corrected Adam with decoupled weight decay:
//   theta -= lr * (m_hat / (sqrt(v_hat) + eps) + weight_decay * theta)
// Moments never see the decay term.
class Adam {
 public:
  Adam(std::vector<std::pair<std::string, ad::Tensor>> params, AdamConfig config);

  // Applies one update from the gradients currently stored on the params.
  // A parameter without a gradient is treated as having a zero gradient.
  // Throws NumericError naming the first parameter with a non-finite
  // gradient; no parameter is modified in that case.
  void step();

  std::size_t steps() const { return t_; }
  const AdamConfig& config() const { return config_; }

 private:
  std::vector<std::pair<std::string, ad::Tensor>> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig config_;
  std::size_t t_ = 0;
};

}  // namespace dsn::train
