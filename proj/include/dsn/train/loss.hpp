#pragma once

#include "dsn/autodiff/tensor.hpp"

namespace dsn::train {

// mean((pred - target)^2) over equal-length vectors. Throws DimensionError
// on a length mismatch or an empty batch.
ad::Tensor mse_loss(const ad::Tensor& pred, const ad::Tensor& target);

}  // namespace dsn::train
