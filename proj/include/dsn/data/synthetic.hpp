#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

#include "dsn/data/embedding_file.hpp"
#include "dsn/data/post_record.hpp"

namespace dsn::data {

// Knobs of the planted-signal generator. The popularity of post i is
//
//   s*_i = base + user_term(u_i) + category_term(leaf_i)
//        + history_weight * mean(s* of the previous history_span posts)
//        + image_weight * <direction, image_i> + N(0, noise_sigma^2)
//
// clamped below at 0, then emitted as (r, d) with r = round(d * 2^(s*-1)).
struct SyntheticSpec {
  std::size_t n_users = 200;
  std::size_t n_posts = 10000;
  std::uint32_t dim = 64;
  std::array<std::size_t, kCategoryLevels> cardinalities{11, 77, 668};
  double noise_sigma = 0.3;
  double history_weight = 0.5;
  std::size_t history_span = 4;
  double image_weight = 0.6;
  double base = 3.0;
  std::uint64_t seed = 13;

  void validate() const;  // throws ConfigError
};

struct SyntheticDataset {
  std::vector<PostRecord> posts;  // chronologically sorted; rows are in post order
  CategoryTree tree;
  EmbeddingMatrix image;
  EmbeddingMatrix text;
  std::vector<double> planted;  // s* per post, aligned with `posts`
};

SyntheticDataset generate_synthetic(const SyntheticSpec& spec);

// File names used inside a dataset directory.
struct DatasetPaths {
  std::filesystem::path posts;
  std::filesystem::path image;
  std::filesystem::path text;
  std::filesystem::path tree;

  static DatasetPaths in_directory(const std::filesystem::path& dir);
};

void write_dataset(const DatasetPaths& paths, const SyntheticDataset& data);

}  // namespace dsn::data
