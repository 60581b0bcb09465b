#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dsn/autodiff/tensor.hpp"
#include "dsn/data/embedding_file.hpp"
#include "dsn/data/post_record.hpp"
#include "dsn/data/stats.hpp"
#include "dsn/model/config.hpp"
#include "dsn/model/user_encoder.hpp"

namespace dsn::model {

// A chronologically sorted post stream with everything a batch needs
// precomputed: labels, encoded users and validated embedding rows.
struct Corpus {
  std::vector<data::PostRecord> posts;
  data::EmbeddingMatrix image;
  data::EmbeddingMatrix text;
  std::vector<double> labels;       // normalized popularity per post
  std::vector<EncodedUser> users;   // per post, encoded with `stats`
  std::size_t imputed_fields = 0;   // total missing numeric values

  // Sorts `posts`, checks that every embedding reference resolves and
  // encodes labels and users. Throws DataError on a dangling reference.
  static Corpus assemble(std::vector<data::PostRecord> posts, data::EmbeddingMatrix image,
                         data::EmbeddingMatrix text, const data::NormStats& stats);

  std::size_t size() const { return posts.size(); }
};

// B windows of l rows each, stacked window-major: row b*l + t holds the
// t-th post of window b. The target is row b*l + l-1.
struct WindowBatch {
  std::size_t batch = 0;
  std::size_t length = 0;
  ad::Tensor image;                        // [(B*l) x d_origin], undefined if switched off
  ad::Tensor text;                         // same
  std::vector<std::int32_t> category_ids;  // [(B*l) x levels], 0 on padding rows
  std::vector<std::uint8_t> pad_mask;      // (B*l), 1 = real post
  std::vector<std::int32_t> uid_index;     // B
  ad::Tensor user_numeric;                 // [B x kUserNumericWidth]
  ad::Tensor labels;                       // [B]
  std::vector<std::size_t> targets;        // stream index of each target
};

// Window for every target in `targets` (stream indices into the corpus);
// positions before the stream start are padding.
WindowBatch build_batch(const Corpus& corpus, std::span<const std::size_t> targets,
                        std::size_t length, const FeatureSwitches& features);

}  // namespace dsn::model
