#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace dsn::model {

struct LayerGradResult {
  std::string layer;
  std::size_t tensors = 0;      // parameters and inputs checked
  std::size_t coordinates = 0;  // scalar coordinates checked
  double max_rel_error = 0.0;
  std::string worst_tensor;
  double worst_analytic = 0.0;  // gradients at the worst coordinate
  double worst_numeric = 0.0;
  bool passed = false;
};

// Finite-difference check of every model layer and of the full model on
// small random instances (dropout off). Each layer is reduced to a scalar
// with a fixed random projection sum(out * R), so gradients are generic
// rather than structurally zero.
std::vector<LayerGradResult> run_gradient_suite(std::uint64_t seed = 13, double eps = 1e-5,
                                                double tol = 1e-4);

}  // namespace dsn::model
