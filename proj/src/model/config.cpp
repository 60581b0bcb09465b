#include "dsn/model/config.hpp"

#include <sstream>

#include "dsn/errors.hpp"

namespace dsn::model {

std::string_view to_string(CategoryEncoder e) {
  switch (e) {
    case CategoryEncoder::kLevel1: return "level1";
    case CategoryEncoder::kLevel2: return "level2";
    case CategoryEncoder::kLevel3: return "level3";
    case CategoryEncoder::kConcat: return "concat";
    case CategoryEncoder::kSum: return "sum";
    case CategoryEncoder::kHce: return "hce";
  }
  return "hce";
}

CategoryEncoder category_encoder_from_string(std::string_view name) {
  for (auto e : {CategoryEncoder::kLevel1, CategoryEncoder::kLevel2, CategoryEncoder::kLevel3,
                 CategoryEncoder::kConcat, CategoryEncoder::kSum, CategoryEncoder::kHce}) {
    if (to_string(e) == name) return e;
  }
  throw ConfigError("unknown category encoder '" + std::string(name) + "'");
}

void ModelConfig::validate() const {
  if (d_origin == 0 || d_hidden == 0) throw ConfigError("model widths must be positive");
  if (heads == 0 || d_hidden % heads != 0) {
    throw ConfigError("d_hidden (" + std::to_string(d_hidden) + ") must be divisible by heads (" +
                      std::to_string(heads) + ")");
  }
  if (window_len < 1) throw ConfigError("window length must be at least 1");
  if (!(alpha >= 0.0 && alpha <= 1.0) || !(beta >= 0.0 && beta <= 1.0)) {
    throw ConfigError("residual ratios alpha and beta must lie in [0, 1]");
  }
  if (!(dropout >= 0.0 && dropout < 1.0)) throw ConfigError("dropout must lie in [0, 1)");
  if (level_cardinalities.empty()) throw ConfigError("at least one category level is required");
  for (auto c : level_cardinalities) {
    if (c == 0) throw ConfigError("category level cardinalities must be positive");
  }
  const auto single = category_encoder == CategoryEncoder::kLevel1   ? 1u
                      : category_encoder == CategoryEncoder::kLevel2 ? 2u
                      : category_encoder == CategoryEncoder::kLevel3 ? 3u
                                                                     : 0u;
  if (single > hce_levels()) {
    throw ConfigError("category encoder " + std::string(to_string(category_encoder)) +
                      " needs at least " + std::to_string(single) + " levels");
  }
  if (uid_vocab_size == 0) throw ConfigError("uid vocabulary must hold the OOV row");
}

std::string ModelConfig::canonical() const {
  std::ostringstream os;
  os.precision(17);
  os << "d_origin=" << d_origin << ";d_hidden=" << d_hidden << ";heads=" << heads
     << ";window_len=" << window_len << ";levels=";
  for (std::size_t i = 0; i < level_cardinalities.size(); ++i) {
    os << (i ? "," : "") << level_cardinalities[i];
  }
  os << ";alpha=" << alpha << ";beta=" << beta << ";dropout=" << dropout
     << ";uid_embed_dim=" << uid_embed_dim << ";uid_vocab_size=" << uid_vocab_size
     << ";features=" << features.image << features.text << features.category
     << ";temporal=" << temporal.local_lstm << temporal.long_attention
     << ";category_encoder=" << to_string(category_encoder);
  return os.str();
}

std::uint64_t ModelConfig::digest() const {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canonical()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

}  // namespace dsn::model
