#include "dsn/autodiff/grad_check.hpp"

#include <algorithm>
#include <cmath>

#include "dsn/errors.hpp"

namespace dsn::ad {

double relative_error(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8});
}

GradCheckReport grad_check(const std::function<Tensor()>& f, Tensor theta, double eps,
                           double tol) {
  const bool was_tracked = theta.requires_grad();
  theta.set_requires_grad(true);
  theta.zero_grad();

  const auto first = f();
  const double f0 = first.item();
  backward(first);
  if (f().item() != f0) {
    theta.set_requires_grad(was_tracked);
    throw NumericError("grad_check: function is not deterministic (value drifted between calls)");
  }

  GradCheckReport report;
  const auto n = theta.numel();
  report.analytic.assign(theta.grad().begin(), theta.grad().end());
  if (report.analytic.empty()) report.analytic.assign(n, 0.0);
  report.numeric.resize(n);
  report.rel_errors.resize(n);

  auto values = theta.mutable_values();
  for (std::size_t i = 0; i < n; ++i) {
    const double saved = values[i];
    values[i] = saved + eps;
    const double up = f().item();
    values[i] = saved - eps;
    const double down = f().item();
    values[i] = saved;
    report.numeric[i] = (up - down) / (2.0 * eps);
    report.rel_errors[i] = relative_error(report.analytic[i], report.numeric[i]);
    if (report.rel_errors[i] > report.max_rel_error) {
      report.max_rel_error = report.rel_errors[i];
      report.worst_index = i;
    }
  }
  report.passed = report.max_rel_error <= tol;
  theta.zero_grad();
  theta.set_requires_grad(was_tracked);
  return report;
}

std::vector<NamedGradCheck> grad_check_all(const std::function<Tensor()>& f,
                                           const std::vector<std::pair<std::string, Tensor>>& params,
                                           double eps, double tol) {
  std::vector<NamedGradCheck> out;
  out.reserve(params.size());
  for (const auto& [name, tensor] : params) {
    out.push_back({name, grad_check(f, tensor, eps, tol)});
  }
  return out;
}

}  // namespace dsn::ad
