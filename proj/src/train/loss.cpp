#include "dsn/train/loss.hpp"

#include "dsn/autodiff/ops.hpp"
#include "dsn/errors.hpp"

namespace dsn::train {

ad::Tensor mse_loss(const ad::Tensor& pred, const ad::Tensor& target) {
  if (pred.numel() == 0) throw DimensionError("mse_loss: empty batch");
  if (pred.shape() != target.shape()) {
    throw DimensionError("mse_loss: prediction shape " + ad::shape_to_string(pred.shape()) +
                         " vs target " + ad::shape_to_string(target.shape()));
  }
  const auto diff = ad::sub(pred, target);
  return ad::mean(ad::mul(diff, diff));
}

}  // namespace dsn::train
