#pragma once

#include <cstdint>

namespace dsn::data {

// Log-normalized views per day: s = log2(r / d) + 1.
// A post with zero views is scored as if it had one (r + 1), which leaves
// every r >= 1 on the exact formula. Throws DataError when d <= 0.
double normalize_popularity(std::uint64_t views, double days);

}  // namespace dsn::data
