#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "dsn/model/config.hpp"
#include "dsn/train/trainer.hpp"

namespace dsn::train {

// One model configuration of the grid. `config_id` is "<axis>=<value>".
struct AblationPoint {
  std::string config_id;
  model::ModelConfig model;
};

// Axis builders; each varies one knob of `base`.
std::vector<AblationPoint> length_axis(const model::ModelConfig& base,
                                       std::span<const std::size_t> lengths);
// All 8 on/off combinations of image, text and category features.
std::vector<AblationPoint> feature_axis(const model::ModelConfig& base);
std::vector<AblationPoint> residual_axis(const model::ModelConfig& base,
                                         std::span<const double> ratios);
std::vector<AblationPoint> category_axis(const model::ModelConfig& base,
                                         std::span<const model::CategoryEncoder> encoders);
// full, no LSTM, no attention.
std::vector<AblationPoint> temporal_axis(const model::ModelConfig& base);

inline constexpr std::size_t kDefaultLengths[] = {1, 4, 8, 16, 32, 64};
inline constexpr double kDefaultRatios[] = {0.0, 0.2, 0.4, 0.6, 0.8, 1.0};

// Full default grid for the named axes: "length", "features", "residual",
// "category", "temporal". Throws ConfigError for an unknown axis.
std::vector<AblationPoint> make_grid(std::span<const std::string> axes,
                                     const model::ModelConfig& base);

struct AblationRow {
  std::string config_id;
  model::ModelConfig model;
  std::uint64_t seed = 0;
  std::optional<double> mae;  // empty when the row failed
  std::optional<double> src;
  double seconds = 0.0;
  std::string status = "ok";  // "ok" or the error message of a failed row
};

struct AblationReport {
  std::vector<AblationRow> rows;  // sorted by (config_id, seed)

  // Header: config_id, l, features, alpha, beta, category, temporal, MAE,
  // SRC, seconds, seed, status.
  void write_tsv(const std::filesystem::path& path) const;
  std::string to_tsv() const;
  // Mean test SRC over the successful rows of `config_id`; empty if none.
  std::optional<double> mean_src(const std::string& config_id) const;
};

// Trains and tests every point for every seed. The seed drives both
// parameter init and data order. At most `jobs` rows run concurrently; a
// throwing row is recorded with its message instead of aborting the grid.
AblationReport ablate(std::span<const AblationPoint> points, std::span<const std::uint64_t> seeds,
                      const PreparedData& data, const TrainConfig& train_config,
                      std::size_t jobs);

std::string features_label(const model::FeatureSwitches& f);
std::string temporal_label(const model::TemporalSwitches& t);

}  // namespace dsn::train
