#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace dsn::data {

inline constexpr std::int64_t kPadIndex = -1;

// Positions into the chronologically sorted global stream; kPadIndex marks
// a padding sentinel. The target is always the last entry.
using Window = std::vector<std::int64_t>;

// One window per post: (i-l+1, ..., i). Windows cross users.
std::vector<Window> build_windows(std::size_t post_count, std::size_t length);

struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;
  std::size_t size() const { return end - begin; }
};

struct ChronoSplit {
  IndexRange train;
  IndexRange val;
  IndexRange test;
};

// Contiguous prefix / middle / suffix of a sorted stream. Sizes are
// floor(n * ratio) for train and validation; test takes the remainder.
// Throws DataError for fewer than 10 posts or ratios that do not sum to 1.
ChronoSplit chronological_split(std::size_t post_count,
                                std::array<double, 3> ratios = {0.8, 0.1, 0.1});

}  // namespace dsn::data
