#include "dsn/model/batch_builder.hpp"

#include <algorithm>
#include <string>

#include "dsn/data/popularity.hpp"
#include "dsn/errors.hpp"

namespace dsn::model {

Corpus Corpus::assemble(std::vector<data::PostRecord> posts, data::EmbeddingMatrix image,
                        data::EmbeddingMatrix text, const data::NormStats& stats) {
  data::sort_chronologically(posts);
  Corpus c;
  c.labels.reserve(posts.size());
  c.users.reserve(posts.size());
  for (const auto& p : posts) {
    if (p.img_row < 0 || static_cast<std::uint64_t>(p.img_row) >= image.count) {
      throw DataError("post " + p.post_id + ": img_row " + std::to_string(p.img_row) +
                      " outside the image file (" + std::to_string(image.count) + " rows)");
    }
    if (p.txt_row < 0 || static_cast<std::uint64_t>(p.txt_row) >= text.count) {
      throw DataError("post " + p.post_id + ": txt_row " + std::to_string(p.txt_row) +
                      " outside the text file (" + std::to_string(text.count) + " rows)");
    }
    c.labels.push_back(data::normalize_popularity(p.views, p.days));
    c.users.push_back(encode_user(p, stats));
    c.imputed_fields += c.users.back().imputed;
  }
  c.posts = std::move(posts);
  c.image = std::move(image);
  c.text = std::move(text);
  return c;
}

namespace {

ad::Tensor gather_embeddings(const data::EmbeddingMatrix& m, std::span<const std::int64_t> rows) {
  std::vector<double> v(rows.size() * m.dim, 0.0);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0) continue;
    auto src = m.row(static_cast<std::size_t>(rows[i]));
    std::copy(src.begin(), src.end(), v.begin() + static_cast<std::ptrdiff_t>(i * m.dim));
  }
  return ad::Tensor({rows.size(), m.dim}, std::move(v));
}

}  // namespace

WindowBatch build_batch(const Corpus& corpus, std::span<const std::size_t> targets,
                        std::size_t length, const FeatureSwitches& features) {
  if (length == 0) throw ConfigError("window length must be at least 1");
  WindowBatch b;
  b.batch = targets.size();
  b.length = length;
  b.targets.assign(targets.begin(), targets.end());
  const auto rows = b.batch * length;
  const auto levels = data::kCategoryLevels;

  std::vector<std::int64_t> img_rows(rows, -1), txt_rows(rows, -1);
  b.category_ids.assign(rows * levels, 0);
  b.pad_mask.assign(rows, 0);
  b.uid_index.resize(b.batch);
  std::vector<double> user(b.batch * kUserNumericWidth);
  std::vector<double> labels(b.batch);

  for (std::size_t w = 0; w < b.batch; ++w) {
    const auto target = targets[w];
    if (target >= corpus.size()) {
      throw DataError("target index " + std::to_string(target) + " outside corpus of " +
                      std::to_string(corpus.size()) + " posts");
    }
    for (std::size_t t = 0; t < length; ++t) {
      const auto back = length - 1 - t;
      if (back > target) continue;  // before the stream start
      const auto& post = corpus.posts[target - back];
      const auto r = w * length + t;
      b.pad_mask[r] = 1;
      img_rows[r] = post.img_row;
      txt_rows[r] = post.txt_row;
      for (std::size_t k = 0; k < levels; ++k) b.category_ids[r * levels + k] = post.category[k];
    }
    const auto& u = corpus.users[target];
    b.uid_index[w] = u.uid_index;
    std::copy(u.features.begin(), u.features.end(),
              user.begin() + static_cast<std::ptrdiff_t>(w * kUserNumericWidth));
    labels[w] = corpus.labels[target];
  }

  if (features.image) b.image = gather_embeddings(corpus.image, img_rows);
  if (features.text) b.text = gather_embeddings(corpus.text, txt_rows);
  b.user_numeric = ad::Tensor({b.batch, kUserNumericWidth}, std::move(user));
  b.labels = ad::Tensor({b.batch}, std::move(labels));
  return b;
}

}  // namespace dsn::model
