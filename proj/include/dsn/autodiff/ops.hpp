#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dsn/autodiff/tensor.hpp"

namespace dsn::ad {

enum class Activation { kRelu, kSigmoid, kElu, kTanh };

// ---- linear algebra -------------------------------------------------------

// [m x k] x [k x n] -> [m x n].
Tensor matmul(const Tensor& a, const Tensor& b);

// ---- elementwise ----------------------------------------------------------

Tensor add(const Tensor& a, const Tensor& b);
Tensor sub(const Tensor& a, const Tensor& b);
Tensor mul(const Tensor& a, const Tensor& b);  // Hadamard
Tensor scale(const Tensor& a, double factor);
// Adds a length-n bias to every row of an [... x n] tensor.
Tensor add_bias(const Tensor& a, const Tensor& bias);
// Zeroes the rows whose mask entry is 0. `mask.size()` == a.rows().
Tensor mask_rows(const Tensor& a, std::span<const std::uint8_t> mask);

Tensor apply_activation(const Tensor& x, Activation kind);
inline Tensor relu(const Tensor& x) { return apply_activation(x, Activation::kRelu); }
inline Tensor sigmoid(const Tensor& x) { return apply_activation(x, Activation::kSigmoid); }
inline Tensor elu(const Tensor& x) { return apply_activation(x, Activation::kElu); }
inline Tensor tanh(const Tensor& x) { return apply_activation(x, Activation::kTanh); }

// Inverted dropout. Identity when `p == 0`.
Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng);

// ---- reductions -----------------------------------------------------------

Tensor sum(const Tensor& x);
Tensor mean(const Tensor& x);

// ---- normalization --------------------------------------------------------

// Softmax over the last dimension. Entries whose mask byte is 0 get zero
// weight; a slice with every entry masked throws DimensionError.
Tensor softmax_lastdim(const Tensor& x, std::span<const std::uint8_t> mask = {});

inline constexpr double kLayerNormEps = 1e-5;

// Per-row standardization over the last dim followed by `gain * z + bias`.
Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias,
                  double eps = kLayerNormEps);

// ---- structural -----------------------------------------------------------

Tensor concat_cols(std::span<const Tensor> parts);
Tensor concat_rows(std::span<const Tensor> parts);
Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t width);
// out[i] = x[indices[i]] (row gather). Backward scatter-adds.
Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices);
Tensor transpose(const Tensor& x);
// [a x b x c] -> [a x c x b].
Tensor swap_last_axes(const Tensor& x);
// [r x (h*w)] -> [r x h]: sums each contiguous block of `block` columns.
Tensor sum_col_blocks(const Tensor& x, std::size_t block);
// [r x h] -> [r x (h*w)]: repeats each column `block` times.
Tensor expand_col_blocks(const Tensor& x, std::size_t block);
// [(n*s) x c] -> [n x c]: sums each run of `segment` consecutive rows.
Tensor sum_row_segments(const Tensor& x, std::size_t segment);

// ---- convolution ----------------------------------------------------------

// 1-D "same" convolution along the sequence axis.
// x: [l x c_in], kernel: [k x c_in x c_out], bias: [c_out] -> [l x c_out].
// k must be odd; the sequence is zero padded by (k-1)/2 on each side.
Tensor conv1d_same(const Tensor& x, const Tensor& kernel, const Tensor& bias);

// Same as conv1d_same applied independently to consecutive blocks of
// `segment_len` rows (a batch of sequences stacked along axis 0).
Tensor conv1d_same_segments(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                            std::size_t segment_len);

}  // namespace dsn::ad
