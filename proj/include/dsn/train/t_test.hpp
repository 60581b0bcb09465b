#pragma once

#include <cstddef>
#include <span>

namespace dsn::train {

struct TTestResult {
  double t = 0.0;  // +-infinity when the differences are constant and nonzero
  double p = 1.0;  // two-sided
  std::size_t dof = 0;
};

// Regularized incomplete beta I_x(a, b), evaluated with a continued fraction.
double incomplete_beta(double a, double b, double x);

// Two-sided tail probability P(|T| >= |t|) for Student's t with `dof`
// degrees of freedom.
double student_t_two_sided(double t, double dof);

// Paired t-test on a - b (typically per-sample absolute errors of two
// models). Throws DimensionError unless the inputs have equal length >= 2.
// Zero variance of the differences yields t = +-inf, p = 0 when their mean
// is nonzero and t = 0, p = 1 when the inputs are identical.
TTestResult paired_t_test(std::span<const double> a, std::span<const double> b);

}  // namespace dsn::train
