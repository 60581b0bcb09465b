#include "dsn/autodiff/lstm.hpp"

#include <vector>

#include "dsn/autodiff/ops.hpp"
#include "dsn/errors.hpp"

namespace dsn::ad {
namespace {

struct CellState {
  Tensor h;
  Tensor c;
};

CellState lstm_cell(const Tensor& x_t, const CellState& prev, const LstmWeights& w) {
  const auto h = w.hidden_size();
  auto pre = add_bias(add(matmul(x_t, w.input_weight), matmul(prev.h, w.hidden_weight)), w.bias);
  auto in_gate = sigmoid(slice_cols(pre, 0, h));
  auto forget_gate = sigmoid(slice_cols(pre, h, h));
  auto candidate = tanh(slice_cols(pre, 2 * h, h));
  auto out_gate = sigmoid(slice_cols(pre, 3 * h, h));
  auto c = add(mul(forget_gate, prev.c), mul(in_gate, candidate));
  auto h_next = mul(out_gate, tanh(c));
  return {std::move(h_next), std::move(c)};
}

void check_weights(const Tensor& x, const LstmWeights& w) {
  const auto h = w.hidden_size();
  if (x.rank() != 2 || w.input_weight.rank() != 2 || w.input_weight.dim(0) != x.dim(1) ||
      w.input_weight.dim(1) != 4 * h || w.hidden_weight.dim(1) != 4 * h ||
      w.bias.numel() != 4 * h) {
    throw DimensionError("lstm: input " + shape_to_string(x.shape()) + " with weights " +
                         shape_to_string(w.input_weight.shape()) + ", " +
                         shape_to_string(w.hidden_weight.shape()) + ", " +
                         shape_to_string(w.bias.shape()));
  }
}

}  // namespace

Tensor lstm_forward(const Tensor& x, const LstmWeights& weights, const Tensor& h0,
                    const Tensor& c0) {
  check_weights(x, weights);
  const auto h = weights.hidden_size();
  CellState state{h0.defined() ? h0.reshape({1, h}) : Tensor::zeros({1, h}),
                  c0.defined() ? c0.reshape({1, h}) : Tensor::zeros({1, h})};
  std::vector<Tensor> outputs;
  outputs.reserve(x.dim(0));
  for (std::size_t t = 0; t < x.dim(0); ++t) {
    const std::size_t row[] = {t};
    state = lstm_cell(gather_rows(x, row), state, weights);
    outputs.push_back(state.h);
  }
  return concat_rows(outputs);
}

Tensor lstm_forward_batched(const Tensor& x, const LstmWeights& weights, std::size_t batch,
                            std::size_t length) {
  check_weights(x, weights);
  if (x.dim(0) != batch * length) {
    throw DimensionError("lstm: " + std::to_string(x.dim(0)) + " rows for batch " +
                         std::to_string(batch) + " x length " + std::to_string(length));
  }
  const auto h = weights.hidden_size();
  CellState state{Tensor::zeros({batch, h}), Tensor::zeros({batch, h})};
  std::vector<Tensor> outputs;
  outputs.reserve(length);
  std::vector<std::size_t> rows(batch);
  for (std::size_t t = 0; t < length; ++t) {
    for (std::size_t b = 0; b < batch; ++b) rows[b] = b * length + t;
    state = lstm_cell(gather_rows(x, rows), state, weights);
    outputs.push_back(state.h);
  }
  // concat_rows yields time-major order (t*batch + b); restore window-major.
  auto stacked = concat_rows(outputs);
  std::vector<std::size_t> order(batch * length);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t t = 0; t < length; ++t) order[b * length + t] = t * batch + b;
  }
  return gather_rows(stacked, order);
}

}  // namespace dsn::ad
