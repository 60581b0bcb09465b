#pragma once

#include <cstdint>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "dsn/autodiff/lstm.hpp"
#include "dsn/autodiff/tensor.hpp"
#include "dsn/model/config.hpp"

namespace dsn::model {

using ad::Tensor;

// GLU-style gate: (x Wv + bv) * sigmoid(x Wg + y Wy + bg).
// `w_aux` is undefined for the single-input variant.
struct GateParams {
  Tensor w_value, b_value;
  Tensor w_gate, b_gate;
  Tensor w_aux;
};

struct LayerNormParams {
  Tensor gain, bias;
};

// Residual mix of a k=3 convolution (adapted path) and a k=1 convolution
// (reprojection of the frozen embedding).
struct AdapterParams {
  Tensor conv3_kernel, conv3_bias;  // [3 x d_origin x d_hidden], [d_hidden]
  Tensor conv1_kernel, conv1_bias;  // [1 x d_origin x d_hidden], [d_hidden]
};

struct CategoryParams {
  Tensor initial;                // [1 x d_hidden] prev input of the first HCE layer
  std::vector<Tensor> tables;    // per level [n_k x d_hidden]; undefined when unused
  std::vector<GateParams> gates; // HCE only
  std::vector<Tensor> fuse;      // HCE only, [2 d_hidden x d_hidden]
  Tensor concat_projection;      // concat encoder only, [levels*d_hidden x d_hidden]
};

struct GrnParams {
  Tensor w_inner, b_inner;  // ELU(x W + b)
  Tensor w_outer, b_outer;  // eta W + b
  GateParams gate;
  LayerNormParams norm;
};

struct TemporalParams {
  ad::LstmWeights lstm;
  Tensor downscale;  // [m*d_hidden x d_hidden], m = active modalities
  GateParams gate;
  LayerNormParams norm;
  GrnParams grn;
};

// Per-head projections stored side by side: head i owns columns
// [i*d_head, (i+1)*d_head).
struct AttentionParams {
  Tensor w_query, w_key, w_value;
};

struct FfnParams {
  Tensor w1, b1;  // [2 d_hidden x d_hidden]
  Tensor w2, b2;  // [d_hidden x d_hidden]
};

struct HeadParams {
  Tensor uid_table;  // [uid_vocab_size x uid_embed_dim]
  Tensor w1, b1;     // [(d_hidden + uid_embed_dim + user numeric) x d_hidden]
  Tensor w2, b2;     // [d_hidden x 1]
};

// Every learnable tensor of the model. Only components enabled by the
// config are allocated; `named` lists each allocated tensor exactly once in
// a fixed order.
struct DsnParams {
  std::optional<AdapterParams> visual;
  std::optional<AdapterParams> textual;
  std::optional<CategoryParams> category;
  std::optional<TemporalParams> temporal;
  std::optional<AttentionParams> attention;
  FfnParams ffn;
  HeadParams head;

  std::vector<std::pair<std::string, Tensor>> named;

  // Uniform(+-sqrt(1/fan_in)) weights, zero biases, unit layer-norm gains.
  static DsnParams create(const ModelConfig& config, std::uint64_t seed);

  std::size_t scalar_count() const;
  void zero_grad();
  // Value copies of every tensor in `named` order, and the inverse.
  std::vector<std::vector<double>> snapshot() const;
  void restore(const std::vector<std::vector<double>>& values);
};

// Helpers shared with the layer unit tests.
GateParams make_gate(const std::string& prefix, std::size_t d, bool two_inputs,
                     std::mt19937_64& rng, std::vector<std::pair<std::string, Tensor>>* named);
Tensor make_weight(ad::Shape shape, std::size_t fan_in, std::mt19937_64& rng);

}  // namespace dsn::model
