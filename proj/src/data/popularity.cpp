#include "dsn/data/popularity.hpp"

#include <cmath>
#include <string>

#include "dsn/errors.hpp"

namespace dsn::data {

double normalize_popularity(std::uint64_t views, double days) {
  if (!(days > 0.0)) {
    throw DataError("days since post must be positive, got " + std::to_string(days));
  }
  const auto r = static_cast<double>(views == 0 ? 1 : views);
  return std::log2(r / days) + 1.0;
}

}  // namespace dsn::data
