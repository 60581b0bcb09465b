#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace dsn::model {

// How the per-level category ids become one d_hidden feature per post.
enum class CategoryEncoder { kLevel1, kLevel2, kLevel3, kConcat, kSum, kHce };

std::string_view to_string(CategoryEncoder e);
CategoryEncoder category_encoder_from_string(std::string_view name);

struct FeatureSwitches {
  bool image = true;
  bool text = true;
  bool category = true;

  std::size_t active_count() const {
    return static_cast<std::size_t>(image) + static_cast<std::size_t>(text) +
           static_cast<std::size_t>(category);
  }
};

struct TemporalSwitches {
  bool local_lstm = true;
  bool long_attention = true;
};

// Width of the encoded user vector excluding the uid embedding:
// one-hot month (12) + day (31) + hour (24), then 11 z-scored fields.
inline constexpr std::size_t kDateOneHotWidth = 12 + 31 + 24;
inline constexpr std::size_t kUserNumericWidth = kDateOneHotWidth + 11;

struct ModelConfig {
  std::size_t d_origin = 512;
  std::size_t d_hidden = 256;
  std::size_t heads = 4;
  std::size_t window_len = 8;
  std::vector<std::size_t> level_cardinalities{11, 77, 668};
  double alpha = 0.2;  // visual residual ratio
  double beta = 0.6;   // textual residual ratio
  double dropout = 0.25;
  std::size_t uid_embed_dim = 32;
  std::size_t uid_vocab_size = 1;  // includes the OOV row
  FeatureSwitches features;
  TemporalSwitches temporal;
  CategoryEncoder category_encoder = CategoryEncoder::kHce;

  std::size_t hce_levels() const { return level_cardinalities.size(); }
  std::size_t head_dim() const { return d_hidden / heads; }

  // Throws ConfigError on any broken invariant.
  void validate() const;
  // Stable textual form of every field that affects parameter shapes or
  // forward semantics.
  std::string canonical() const;
  // FNV-1a 64 of canonical().
  std::uint64_t digest() const;
};

}  // namespace dsn::model
