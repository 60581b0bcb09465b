#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <span>
#include <string>

#include "dsn/data/post_record.hpp"

namespace dsn::data {

inline constexpr double kStdFloor = 1e-8;
inline constexpr std::int32_t kOovUid = 0;

// Training-split normalization statistics.
struct NormStats {
  std::array<double, kNumericFieldCount> mean{};
  std::array<double, kNumericFieldCount> std{};  // population std, floored at kStdFloor
  std::map<std::string, std::int32_t> uid_index;  // 1-based; 0 is the OOV row

  std::size_t uid_vocab_size() const { return uid_index.size() + 1; }
  std::int32_t lookup_uid(const std::string& uid) const;
  double zscore(std::size_t field, double value) const;
};

// Missing values are skipped when computing a field's moments. A field
// with no observed value gets mean 0 and std kStdFloor.
NormStats fit_stats(std::span<const PostRecord> train_posts);

}  // namespace dsn::data
