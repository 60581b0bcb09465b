#include "dsn/data/stats.hpp"

#include <cmath>
#include <set>

#include "dsn/errors.hpp"

namespace dsn::data {

std::int32_t NormStats::lookup_uid(const std::string& uid) const {
  const auto it = uid_index.find(uid);
  return it == uid_index.end() ? kOovUid : it->second;
}

double NormStats::zscore(std::size_t field, double value) const {
  return (value - mean[field]) / std[field];
}

NormStats fit_stats(std::span<const PostRecord> train_posts) {
  if (train_posts.empty()) throw DataError("cannot fit statistics on an empty training split");
  NormStats stats;
  for (std::size_t f = 0; f < kNumericFieldCount; ++f) {
    double total = 0.0;
    std::size_t count = 0;
    for (const auto& p : train_posts) {
      if (!p.numeric[f]) continue;
      total += *p.numeric[f];
      ++count;
    }
    if (count == 0) {
      stats.mean[f] = 0.0;
      stats.std[f] = kStdFloor;
      continue;
    }
    const double mu = total / static_cast<double>(count);
    double ss = 0.0;
    for (const auto& p : train_posts) {
      if (!p.numeric[f]) continue;
      const double dev = *p.numeric[f] - mu;
      ss += dev * dev;
    }
    const double sd = std::sqrt(ss / static_cast<double>(count));
    stats.mean[f] = mu;
    stats.std[f] = sd < kStdFloor ? kStdFloor : sd;
  }
  std::set<std::string> uids;
  for (const auto& p : train_posts) uids.insert(p.uid);
  std::int32_t next = 1;
  for (const auto& uid : uids) stats.uid_index.emplace(uid, next++);
  return stats;
}

}  // namespace dsn::data
