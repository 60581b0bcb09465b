#include "dsn/train/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "dsn/errors.hpp"

namespace dsn::train {
namespace {

void check_lengths(std::span<const double> a, std::span<const double> b, const char* what) {
  if (a.size() != b.size()) {
    throw DimensionError(std::string(what) + ": lengths " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()) + " differ");
  }
}

}  // namespace

double mae(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, "mae");
  if (pred.empty()) throw DimensionError("mae: empty input");
  double total = 0.0;
  for (std::size_t i = 0; i < pred.size(); ++i) total += std::abs(pred[i] - truth[i]);
  return total / static_cast<double>(pred.size());
}

std::vector<double> average_ranks(std::span<const double> x) {
  std::vector<std::size_t> order(x.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](auto a, auto b) { return x[a] < x[b]; });
  std::vector<double> ranks(x.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i + 1;
    while (j < order.size() && x[order[j]] == x[order[i]]) ++j;
    // Positions i..j-1 hold ranks i+1..j.
    const double rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) ranks[order[t]] = rank;
    i = j;
  }
  return ranks;
}

double src(std::span<const double> pred, std::span<const double> truth) {
  check_lengths(pred, truth, "src");
  const auto k = pred.size();
  if (k < 2) throw DimensionError("src needs at least two samples");
  const auto rp = average_ranks(pred);
  const auto rt = average_ranks(truth);
  // Both rank vectors have mean (k+1)/2 by construction.
  const double centre = 0.5 * static_cast<double>(k + 1);
  double cross = 0.0, var_p = 0.0, var_t = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double a = rp[i] - centre;
    const double b = rt[i] - centre;
    cross += a * b;
    var_p += a * a;
    var_t += b * b;
  }
  if (var_p == 0.0 || var_t == 0.0) {
    throw NumericError("src is undefined for a constant input");
  }
  const double n1 = static_cast<double>(k - 1);
  return (cross / n1) / (std::sqrt(var_p / n1) * std::sqrt(var_t / n1));
}

}  // namespace dsn::train
