#pragma once

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "dsn/model/config.hpp"
#include "dsn/model/params.hpp"

namespace dsn::model {

// Dropout settings threaded through a forward pass. `rate == 0` (eval mode,
// gradient checks) makes every dropout site an identity.
struct DropoutContext {
  double rate = 0.0;
  std::mt19937_64* rng = nullptr;

  Tensor apply(const Tensor& x) const;
};

// (x Wv + bv) * sigmoid(x Wg [+ y Wy] + bg). Pass an undefined `y` (and
// params without w_aux) for the single-input variant.
Tensor glu_gate(const Tensor& x, const Tensor& y, const GateParams& p);

// (1 - ratio) * ReLU(Conv_k3(f)) + ratio * Conv_k1(f), per sequence of
// `segment_len` rows. f: [(B*l) x d_origin] -> [(B*l) x d_hidden].
Tensor vl_adapt(const Tensor& f_origin, double ratio, const AdapterParams& p,
                std::size_t segment_len);

// Hierarchical category embedding. `ids` is row-major [rows x levels].
// For level k: gated = Gate_k(prev, E_k[ids_k]); prev = [E_k[ids_k] | gated] W_k,
// starting from the learned initial embedding. Returns the last level's
// output [rows x d_hidden]. Throws DataError naming the level for ids out
// of range.
Tensor hce_forward(std::span<const std::int32_t> ids, std::span<const std::size_t> cardinalities,
                   const CategoryParams& p);

// Dispatches to the configured category encoder (single level, sum,
// concatenation + projection, or HCE).
Tensor encode_categories(std::span<const std::int32_t> ids, const ModelConfig& config,
                         const CategoryParams& p);

// LayerNorm(x + Gate(ELU(x Wi + bi) Wo + bo)).
Tensor grn(const Tensor& x, const GrnParams& p);

// LSTM over each window, gated residual with a linear downscale of f, layer
// norm, then GRN. With the LSTM switched off the stage reduces to f W.
// f: [(B*l) x m*d_hidden]; rows whose pad mask is 0 are fed as zeros.
Tensor local_temporal(const Tensor& f, std::span<const std::uint8_t> pad_mask,
                      const TemporalParams& p, bool use_lstm, std::size_t batch,
                      std::size_t length);

struct AttentionResult {
  Tensor h;                          // [B x d_hidden]
  std::vector<double> weights;       // [B x heads x (l-1)], zero on padding
  std::vector<std::uint8_t> no_neighbors;  // per window: no unmasked neighbor, h = 0
  std::size_t heads = 0;
  std::size_t neighbors = 0;         // l - 1
};

// Multi-head attention with the target (last row of each window) as the
// single query and the other rows as keys/values. Scores are scaled by
// 1/sqrt(d_head). Heads are concatenated without an output projection.
AttentionResult target_attention(const Tensor& phi, std::span<const std::uint8_t> pad_mask,
                                 const AttentionParams& p, std::size_t heads, std::size_t batch,
                                 std::size_t length);

// ReLU([h | phi_target] W1 + b1) W2 + b2.
Tensor fuse_ffn(const Tensor& h, const Tensor& phi_target, const FfnParams& p,
                const DropoutContext& dropout = {});

}  // namespace dsn::model
