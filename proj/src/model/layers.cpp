#include "dsn/model/layers.hpp"

#include <cmath>
#include <string>

#include "dsn/autodiff/lstm.hpp"
#include "dsn/autodiff/ops.hpp"
#include "dsn/errors.hpp"

namespace dsn::model {

using namespace dsn::ad;

Tensor DropoutContext::apply(const Tensor& x) const {
  if (rate <= 0.0 || rng == nullptr) return x;
  return dropout(x, rate, *rng);
}

Tensor glu_gate(const Tensor& x, const Tensor& y, const GateParams& p) {
  auto value = add_bias(matmul(x, p.w_value), p.b_value);
  auto gate_pre = matmul(x, p.w_gate);
  if (y.defined()) {
    if (!p.w_aux.defined()) throw DimensionError("glu_gate: second input given to a one-input gate");
    if (y.shape() != x.shape()) {
      throw DimensionError("glu_gate: input shapes " + shape_to_string(x.shape()) + " and " +
                           shape_to_string(y.shape()) + " differ");
    }
    gate_pre = add(gate_pre, matmul(y, p.w_aux));
  }
  return mul(value, sigmoid(add_bias(gate_pre, p.b_gate)));
}

Tensor vl_adapt(const Tensor& f_origin, double ratio, const AdapterParams& p,
                std::size_t segment_len) {
  if (!(ratio >= 0.0 && ratio <= 1.0)) throw ConfigError("residual ratio must lie in [0, 1]");
  auto adapted = relu(conv1d_same_segments(f_origin, p.conv3_kernel, p.conv3_bias, segment_len));
  auto kept = conv1d_same_segments(f_origin, p.conv1_kernel, p.conv1_bias, segment_len);
  return add(scale(adapted, 1.0 - ratio), scale(kept, ratio));
}

namespace {

std::vector<std::size_t> level_ids(std::span<const std::int32_t> ids, std::size_t levels,
                                   std::size_t level, std::size_t cardinality) {
  const auto rows = ids.size() / levels;
  std::vector<std::size_t> out(rows);
  for (std::size_t r = 0; r < rows; ++r) {
    const auto id = ids[r * levels + level];
    if (id < 0 || static_cast<std::size_t>(id) >= cardinality) {
      throw DataError("category id " + std::to_string(id) + " out of range for level " +
                      std::to_string(level + 1) + " (cardinality " + std::to_string(cardinality) +
                      ")");
    }
    out[r] = static_cast<std::size_t>(id);
  }
  return out;
}

void check_id_layout(std::span<const std::int32_t> ids, std::size_t levels) {
  if (levels == 0 || ids.size() % levels != 0) {
    throw DimensionError("category ids (" + std::to_string(ids.size()) +
                         ") are not a whole number of rows of " + std::to_string(levels) +
                         " levels");
  }
}

}  // namespace

Tensor hce_forward(std::span<const std::int32_t> ids, std::span<const std::size_t> cardinalities,
                   const CategoryParams& p) {
  const auto levels = cardinalities.size();
  check_id_layout(ids, levels);
  if (p.gates.size() != levels || p.fuse.size() != levels) {
    throw DimensionError("hce_forward: parameters for " + std::to_string(p.gates.size()) +
                         " layers, ids for " + std::to_string(levels));
  }
  const auto rows = ids.size() / levels;
  const std::vector<std::size_t> zeros(rows, 0);
  auto prev = gather_rows(p.initial, zeros);
  for (std::size_t k = 0; k < levels; ++k) {
    const auto idx = level_ids(ids, levels, k, cardinalities[k]);
    auto own = gather_rows(p.tables[k], idx);
    auto gated = glu_gate(prev, own, p.gates[k]);
    const Tensor parts[] = {own, gated};
    prev = matmul(concat_cols(parts), p.fuse[k]);
  }
  return prev;
}

Tensor encode_categories(std::span<const std::int32_t> ids, const ModelConfig& config,
                         const CategoryParams& p) {
  const auto& card = config.level_cardinalities;
  const auto levels = card.size();
  check_id_layout(ids, levels);
  auto lookup = [&](std::size_t k) {
    return gather_rows(p.tables[k], level_ids(ids, levels, k, card[k]));
  };
  switch (config.category_encoder) {
    case CategoryEncoder::kLevel1: return lookup(0);
    case CategoryEncoder::kLevel2: return lookup(1);
    case CategoryEncoder::kLevel3: return lookup(2);
    case CategoryEncoder::kSum: {
      auto total = lookup(0);
      for (std::size_t k = 1; k < levels; ++k) total = add(total, lookup(k));
      return total;
    }
    case CategoryEncoder::kConcat: {
      std::vector<Tensor> parts;
      for (std::size_t k = 0; k < levels; ++k) parts.push_back(lookup(k));
      return matmul(concat_cols(parts), p.concat_projection);
    }
    case CategoryEncoder::kHce: return hce_forward(ids, card, p);
  }
  throw ConfigError("unhandled category encoder");
}

Tensor grn(const Tensor& x, const GrnParams& p) {
  auto inner = elu(add_bias(matmul(x, p.w_inner), p.b_inner));
  auto outer = add_bias(matmul(inner, p.w_outer), p.b_outer);
  return layer_norm(add(x, glu_gate(outer, Tensor{}, p.gate)), p.norm.gain, p.norm.bias);
}

Tensor local_temporal(const Tensor& f, std::span<const std::uint8_t> pad_mask,
                      const TemporalParams& p, bool use_lstm, std::size_t batch,
                      std::size_t length) {
  auto fed = mask_rows(f, pad_mask);
  auto residual = matmul(fed, p.downscale);
  if (!use_lstm) return residual;
  auto lstm_out = lstm_forward_batched(fed, p.lstm, batch, length);
  auto theta = layer_norm(add(glu_gate(lstm_out, Tensor{}, p.gate), residual), p.norm.gain,
                          p.norm.bias);
  return grn(theta, p.grn);
}

AttentionResult target_attention(const Tensor& phi, std::span<const std::uint8_t> pad_mask,
                                 const AttentionParams& p, std::size_t heads, std::size_t batch,
                                 std::size_t length) {
  const auto d = phi.cols();
  if (phi.rows() != batch * length || pad_mask.size() != batch * length) {
    throw DimensionError("target_attention: " + std::to_string(phi.rows()) + " rows and " +
                         std::to_string(pad_mask.size()) + " mask entries for batch " +
                         std::to_string(batch) + " x length " + std::to_string(length));
  }
  if (heads == 0 || d % heads != 0) {
    throw ConfigError("target_attention: width " + std::to_string(d) +
                      " not divisible by heads " + std::to_string(heads));
  }
  AttentionResult result;
  result.heads = heads;
  result.neighbors = length - 1;
  const auto n = length - 1;
  const auto d_head = d / heads;
  result.no_neighbors.assign(batch, 1);
  if (n == 0) {
    result.h = Tensor::zeros({batch, d});
    return result;
  }

  std::vector<std::size_t> target_rows(batch), neighbor_rows(batch * n), query_rows(batch * n);
  std::vector<std::uint8_t> has_neighbor(batch, 0);
  for (std::size_t b = 0; b < batch; ++b) {
    target_rows[b] = b * length + n;
    for (std::size_t j = 0; j < n; ++j) {
      neighbor_rows[b * n + j] = b * length + j;
      query_rows[b * n + j] = b;
      if (pad_mask[b * length + j]) has_neighbor[b] = 1;
    }
    result.no_neighbors[b] = has_neighbor[b] ? 0 : 1;
  }

  auto q = matmul(gather_rows(phi, target_rows), p.w_query);      // [B x d]
  auto neighbors = gather_rows(phi, neighbor_rows);               // [(B*n) x d]
  auto k = matmul(neighbors, p.w_key);
  auto v = matmul(neighbors, p.w_value);
  // scores[b, j, head] = <q_b, k_bj> restricted to the head's columns.
  auto scores = scale(sum_col_blocks(mul(gather_rows(q, query_rows), k), d_head),
                      1.0 / std::sqrt(static_cast<double>(d_head)));
  auto per_head = swap_last_axes(scores.reshape({batch, n, heads})).reshape({batch * heads, n});

  // Windows without any neighbor get one dummy live slot so the softmax is
  // defined; their output row is zeroed afterwards.
  std::vector<std::uint8_t> mask(batch * heads * n);
  for (std::size_t b = 0; b < batch; ++b) {
    for (std::size_t h = 0; h < heads; ++h) {
      for (std::size_t j = 0; j < n; ++j) {
        const bool live = has_neighbor[b] ? pad_mask[b * length + j] != 0 : j == 0;
        mask[(b * heads + h) * n + j] = live ? 1 : 0;
      }
    }
  }
  auto weights = softmax_lastdim(per_head, mask);
  auto weights_by_neighbor =
      swap_last_axes(weights.reshape({batch, heads, n})).reshape({batch * n, heads});
  auto h = sum_row_segments(mul(expand_col_blocks(weights_by_neighbor, d_head), v), n);
  result.h = mask_rows(h, has_neighbor);

  result.weights.assign(weights.values().begin(), weights.values().end());
  for (std::size_t b = 0; b < batch; ++b) {
    if (has_neighbor[b]) continue;
    std::fill_n(result.weights.begin() + static_cast<std::ptrdiff_t>(b * heads * n), heads * n, 0.0);
  }
  return result;
}

Tensor fuse_ffn(const Tensor& h, const Tensor& phi_target, const FfnParams& p,
                const DropoutContext& dropout) {
  const Tensor parts[] = {h, phi_target};
  auto hidden = relu(add_bias(matmul(concat_cols(parts), p.w1), p.b1));
  return add_bias(matmul(dropout.apply(hidden), p.w2), p.b2);
}

}  // namespace dsn::model
