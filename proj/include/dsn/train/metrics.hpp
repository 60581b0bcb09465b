#pragma once

#include <span>
#include <vector>

namespace dsn::train {

// (1/k) * sum |pred - truth|. Throws DimensionError on length mismatch or
// empty input.
double mae(std::span<const double> pred, std::span<const double> truth);

// 1-based ranks; tied values share the mean of the ranks they span.
std::vector<double> average_ranks(std::span<const double> x);

// Spearman correlation: Pearson correlation of average ranks with sample
// (k-1) normalization. Throws DimensionError for k < 2 and NumericError
// when either input is constant.
double src(std::span<const double> pred, std::span<const double> truth);

}  // namespace dsn::train
