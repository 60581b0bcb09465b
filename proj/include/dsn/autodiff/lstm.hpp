#pragma once

#include <cstddef>

#include "dsn/autodiff/tensor.hpp"

namespace dsn::ad {

// Weights of a single-layer LSTM. Gate blocks along the 4*hidden axis are
// ordered input, forget, candidate, output.
struct LstmWeights {
  Tensor input_weight;   // [d_in x 4h]
  Tensor hidden_weight;  // [h x 4h]
  Tensor bias;           // [4h]

  std::size_t hidden_size() const { return hidden_weight.dim(0); }
};

// Runs the cell over every row of x: [l x d_in] -> [l x h].
// h0/c0 default to zeros when left undefined.
Tensor lstm_forward(const Tensor& x, const LstmWeights& weights, const Tensor& h0 = {},
                    const Tensor& c0 = {});

// Batched variant: x stacks `batch` sequences of `length` rows each,
// [(batch*length) x d_in] -> [(batch*length) x h], zero initial state.
Tensor lstm_forward_batched(const Tensor& x, const LstmWeights& weights, std::size_t batch,
                            std::size_t length);

}  // namespace dsn::ad
