#include "dsn/data/windows.hpp"

#include <cmath>
#include <string>

#include "dsn/errors.hpp"

namespace dsn::data {

std::vector<Window> build_windows(std::size_t post_count, std::size_t length) {
  if (length == 0) throw ConfigError("window length must be at least 1");
  std::vector<Window> windows;
  windows.reserve(post_count);
  for (std::size_t i = 0; i < post_count; ++i) {
    Window w(length);
    for (std::size_t j = 0; j < length; ++j) {
      const auto pos = static_cast<std::int64_t>(i) - static_cast<std::int64_t>(length - 1 - j);
      w[j] = pos < 0 ? kPadIndex : pos;
    }
    windows.push_back(std::move(w));
  }
  return windows;
}

ChronoSplit chronological_split(std::size_t post_count, std::array<double, 3> ratios) {
  if (post_count < 10) {
    throw DataError("chronological split needs at least 10 posts, got " +
                    std::to_string(post_count));
  }
  for (double r : ratios) {
    if (r < 0.0) throw DataError("split ratios must be non-negative");
  }
  if (std::abs(ratios[0] + ratios[1] + ratios[2] - 1.0) > 1e-9) {
    throw DataError("split ratios must sum to 1");
  }
  // The small slack keeps exact products such as 0.1 * 486000 from
  // flooring one short.
  auto part = [post_count](double r) {
    return static_cast<std::size_t>(std::floor(static_cast<double>(post_count) * r + 1e-9));
  };
  const auto n_train = part(ratios[0]);
  const auto n_val = part(ratios[1]);
  ChronoSplit split;
  split.train = {0, n_train};
  split.val = {n_train, n_train + n_val};
  split.test = {n_train + n_val, post_count};
  return split;
}

}  // namespace dsn::data
