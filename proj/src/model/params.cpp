#include "dsn/model/params.hpp"

#include <cmath>

#include "dsn/errors.hpp"

namespace dsn::model {
namespace {

using Named = std::vector<std::pair<std::string, Tensor>>;

Tensor registered(Named* named, const std::string& name, Tensor t) {
  t.set_requires_grad(true);
  if (named) named->emplace_back(name, t);
  return t;
}

Tensor bias_zeros(std::size_t n) { return Tensor::zeros({n}, true); }

}  // namespace

Tensor make_weight(ad::Shape shape, std::size_t fan_in, std::mt19937_64& rng) {
  const double bound = std::sqrt(1.0 / static_cast<double>(fan_in));
  std::uniform_real_distribution<double> dist(-bound, bound);
  std::vector<double> v(ad::shape_numel(shape));
  for (auto& x : v) x = dist(rng);
  return Tensor(std::move(shape), std::move(v), true);
}

GateParams make_gate(const std::string& prefix, std::size_t d, bool two_inputs,
                     std::mt19937_64& rng, Named* named) {
  GateParams g;
  g.w_value = registered(named, prefix + ".w_value", make_weight({d, d}, d, rng));
  g.b_value = registered(named, prefix + ".b_value", bias_zeros(d));
  g.w_gate = registered(named, prefix + ".w_gate", make_weight({d, d}, d, rng));
  if (two_inputs) g.w_aux = registered(named, prefix + ".w_aux", make_weight({d, d}, d, rng));
  g.b_gate = registered(named, prefix + ".b_gate", bias_zeros(d));
  return g;
}

DsnParams DsnParams::create(const ModelConfig& config, std::uint64_t seed) {
  config.validate();
  std::mt19937_64 rng(seed);
  DsnParams p;
  Named* named = &p.named;
  const auto d = config.d_hidden;
  const auto d_origin = config.d_origin;

  auto make_adapter = [&](const std::string& prefix) {
    AdapterParams a;
    a.conv3_kernel = registered(named, prefix + ".conv3_kernel",
                                make_weight({3, d_origin, d}, 3 * d_origin, rng));
    a.conv3_bias = registered(named, prefix + ".conv3_bias", bias_zeros(d));
    a.conv1_kernel = registered(named, prefix + ".conv1_kernel",
                                make_weight({1, d_origin, d}, d_origin, rng));
    a.conv1_bias = registered(named, prefix + ".conv1_bias", bias_zeros(d));
    return a;
  };
  if (config.features.image) p.visual = make_adapter("visual_adapter");
  if (config.features.text) p.textual = make_adapter("text_adapter");

  if (config.features.category) {
    CategoryParams c;
    const auto levels = config.hce_levels();
    c.tables.resize(levels);
    auto make_table = [&](std::size_t k) {
      c.tables[k] = registered(named, "category.table" + std::to_string(k + 1),
                               make_weight({config.level_cardinalities[k], d}, 1, rng));
    };
    switch (config.category_encoder) {
      case CategoryEncoder::kLevel1: make_table(0); break;
      case CategoryEncoder::kLevel2: make_table(1); break;
      case CategoryEncoder::kLevel3: make_table(2); break;
      case CategoryEncoder::kSum:
        for (std::size_t k = 0; k < levels; ++k) make_table(k);
        break;
      case CategoryEncoder::kConcat:
        for (std::size_t k = 0; k < levels; ++k) make_table(k);
        c.concat_projection = registered(named, "category.concat_projection",
                                         make_weight({levels * d, d}, levels * d, rng));
        break;
      case CategoryEncoder::kHce:
        c.initial = registered(named, "category.initial", make_weight({1, d}, 1, rng));
        for (std::size_t k = 0; k < levels; ++k) {
          make_table(k);
          c.gates.push_back(
              make_gate("category.gate" + std::to_string(k + 1), d, true, rng, named));
          c.fuse.push_back(registered(named, "category.fuse" + std::to_string(k + 1),
                                      make_weight({2 * d, d}, 2 * d, rng)));
        }
        break;
    }
    p.category = std::move(c);
  }

  const auto modalities = config.features.active_count();
  if (modalities > 0) {
    TemporalParams t;
    const auto width = modalities * d;
    if (config.temporal.local_lstm) {
      t.lstm.input_weight =
          registered(named, "temporal.lstm.input_weight", make_weight({width, 4 * d}, width, rng));
      t.lstm.hidden_weight =
          registered(named, "temporal.lstm.hidden_weight", make_weight({d, 4 * d}, d, rng));
      t.lstm.bias = registered(named, "temporal.lstm.bias", bias_zeros(4 * d));
      t.gate = make_gate("temporal.gate", d, false, rng, named);
    }
    t.downscale = registered(named, "temporal.downscale", make_weight({width, d}, width, rng));
    if (config.temporal.local_lstm) {
      t.norm.gain = registered(named, "temporal.norm.gain", Tensor::filled({d}, 1.0));
      t.norm.bias = registered(named, "temporal.norm.bias", bias_zeros(d));
      t.grn.w_inner = registered(named, "temporal.grn.w_inner", make_weight({d, d}, d, rng));
      t.grn.b_inner = registered(named, "temporal.grn.b_inner", bias_zeros(d));
      t.grn.w_outer = registered(named, "temporal.grn.w_outer", make_weight({d, d}, d, rng));
      t.grn.b_outer = registered(named, "temporal.grn.b_outer", bias_zeros(d));
      t.grn.gate = make_gate("temporal.grn.gate", d, false, rng, named);
      t.grn.norm.gain = registered(named, "temporal.grn.norm.gain", Tensor::filled({d}, 1.0));
      t.grn.norm.bias = registered(named, "temporal.grn.norm.bias", bias_zeros(d));
    }
    p.temporal = std::move(t);

    if (config.temporal.long_attention && config.window_len > 1) {
      AttentionParams a;
      a.w_query = registered(named, "attention.w_query", make_weight({d, d}, d, rng));
      a.w_key = registered(named, "attention.w_key", make_weight({d, d}, d, rng));
      a.w_value = registered(named, "attention.w_value", make_weight({d, d}, d, rng));
      p.attention = std::move(a);
    }
  }

  p.ffn.w1 = registered(named, "ffn.w1", make_weight({2 * d, d}, 2 * d, rng));
  p.ffn.b1 = registered(named, "ffn.b1", bias_zeros(d));
  p.ffn.w2 = registered(named, "ffn.w2", make_weight({d, d}, d, rng));
  p.ffn.b2 = registered(named, "ffn.b2", bias_zeros(d));

  const auto head_in = d + config.uid_embed_dim + kUserNumericWidth;
  p.head.uid_table = registered(named, "head.uid_table",
                                make_weight({config.uid_vocab_size, config.uid_embed_dim}, 1, rng));
  p.head.w1 = registered(named, "head.w1", make_weight({head_in, d}, head_in, rng));
  p.head.b1 = registered(named, "head.b1", bias_zeros(d));
  p.head.w2 = registered(named, "head.w2", make_weight({d, 1}, d, rng));
  p.head.b2 = registered(named, "head.b2", bias_zeros(1));
  return p;
}

std::size_t DsnParams::scalar_count() const {
  std::size_t n = 0;
  for (const auto& [_, t] : named) n += t.numel();
  return n;
}

void DsnParams::zero_grad() {
  for (auto& [_, t] : named) t.zero_grad();
}

std::vector<std::vector<double>> DsnParams::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(named.size());
  for (const auto& [_, t] : named) out.emplace_back(t.values().begin(), t.values().end());
  return out;
}

void DsnParams::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != named.size()) throw DimensionError("snapshot does not match parameter set");
  for (std::size_t i = 0; i < named.size(); ++i) {
    auto dst = named[i].second.mutable_values();
    if (dst.size() != values[i].size()) {
      throw DimensionError("snapshot entry for " + named[i].first + " has the wrong size");
    }
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

}  // namespace dsn::model
