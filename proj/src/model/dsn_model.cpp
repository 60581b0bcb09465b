#include "dsn/model/dsn_model.hpp"

#include <string>

#include "dsn/autodiff/ops.hpp"
#include "dsn/errors.hpp"

namespace dsn::model {

using namespace dsn::ad;

DsnModel::DsnModel(const ModelConfig& config, std::uint64_t seed)
    : config_(config),
      params_(DsnParams::create(config, seed)),
      // Separate stream so dropout masks never shift parameter init.
      dropout_rng_(seed ^ 0x9e3779b97f4a7c15ull) {}

ForwardResult DsnModel::forward(const WindowBatch& batch, Mode mode) {
  const auto& cfg = config_;
  const auto B = batch.batch;
  const auto l = batch.length;
  const auto d = cfg.d_hidden;
  if (l != cfg.window_len) {
    throw DimensionError("batch window length " + std::to_string(l) +
                         " differs from the configured " + std::to_string(cfg.window_len));
  }
  if (B == 0) throw DimensionError("empty batch");
  const DropoutContext drop{mode == Mode::kTrain ? cfg.dropout : 0.0, &dropout_rng_};

  std::vector<Tensor> modalities;
  if (cfg.features.image) {
    if (!batch.image.defined()) throw DataError("image features switched on but missing");
    modalities.push_back(vl_adapt(batch.image, cfg.alpha, *params_.visual, l));
  }
  if (cfg.features.text) {
    if (!batch.text.defined()) throw DataError("text features switched on but missing");
    modalities.push_back(vl_adapt(batch.text, cfg.beta, *params_.textual, l));
  }
  if (cfg.features.category) {
    if (batch.category_ids.size() != B * l * cfg.hce_levels()) {
      throw DimensionError("batch carries " + std::to_string(batch.category_ids.size()) +
                           " category ids, expected " + std::to_string(B * l * cfg.hce_levels()));
    }
    modalities.push_back(encode_categories(batch.category_ids, cfg, *params_.category));
  }

  ForwardResult out;
  Tensor phi;
  if (modalities.empty()) {
    phi = Tensor::zeros({B * l, d});
  } else {
    auto f = drop.apply(mask_rows(concat_cols(modalities), batch.pad_mask));
    phi = local_temporal(f, batch.pad_mask, *params_.temporal, cfg.temporal.local_lstm, B, l);
  }

  Tensor h;
  if (params_.attention) {
    out.attention = target_attention(phi, batch.pad_mask, *params_.attention, cfg.heads, B, l);
    h = out.attention.h;
  } else {
    h = Tensor::zeros({B, d});
    out.attention.no_neighbors.assign(B, 1);
    out.attention.heads = cfg.heads;
  }

  std::vector<std::size_t> target_rows(B);
  for (std::size_t b = 0; b < B; ++b) target_rows[b] = b * l + l - 1;
  auto h_tilde = fuse_ffn(h, gather_rows(phi, target_rows), params_.ffn, drop);

  std::vector<std::size_t> uids(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto u = batch.uid_index[b];
    uids[b] = u >= 0 && static_cast<std::size_t>(u) < cfg.uid_vocab_size
                  ? static_cast<std::size_t>(u)
                  : static_cast<std::size_t>(data::kOovUid);
  }
  const Tensor head_in[] = {h_tilde, gather_rows(params_.head.uid_table, uids),
                            batch.user_numeric};
  auto hidden = relu(add_bias(matmul(concat_cols(head_in), params_.head.w1), params_.head.b1));
  auto pred = add_bias(matmul(drop.apply(hidden), params_.head.w2), params_.head.b2);
  out.predictions = pred.reshape({B});
  return out;
}

}  // namespace dsn::model
