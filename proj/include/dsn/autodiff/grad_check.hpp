#pragma once

#include <cstddef>
#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "dsn/autodiff/tensor.hpp"

namespace dsn::ad {

struct GradCheckReport {
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  std::vector<double> rel_errors;  // one per coordinate of theta
  std::vector<double> analytic;
  std::vector<double> numeric;
  bool passed = false;
};

// Relative error used by every gradient comparison in the project:
// |a - b| / max(|a|, |b|, 1e-8).
double relative_error(double a, double b);

// Compares reverse-mode gradients of the scalar `f` with respect to `theta`
// against central differences. `f` must read `theta` by handle; it is
// re-evaluated with each coordinate perturbed in place (and restored).
// Throws NumericError when two evaluations at the same point disagree.
GradCheckReport grad_check(const std::function<Tensor()>& f, Tensor theta, double eps = 1e-5,
                           double tol = 1e-4);

struct NamedGradCheck {
  std::string name;
  GradCheckReport report;
};

// Runs grad_check over several tensors of one function, e.g. every
// parameter of a layer. Passes only when every tensor passes.
std::vector<NamedGradCheck> grad_check_all(const std::function<Tensor()>& f,
                                           const std::vector<std::pair<std::string, Tensor>>& params,
                                           double eps = 1e-5, double tol = 1e-4);

}  // namespace dsn::ad
