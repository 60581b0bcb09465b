#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "dsn/model/config.hpp"
#include "dsn/train/trainer.hpp"

namespace dsn::cli {

inline constexpr std::uint64_t kDefaultSeed = 13;

// Everything a subcommand needs. Settings come from built-in defaults, then
// an optional `key = value` file, then command-line flags.
struct RunConfig {
  model::ModelConfig model = default_model();
  train::TrainConfig train;
  std::uint64_t seed = kDefaultSeed;
  std::size_t jobs = 1;

  // gen-data
  std::size_t posts = 10000;
  std::size_t users = 200;
  double noise_sigma = 0.3;

  // ablate
  std::vector<std::string> axes{"length", "features", "residual", "category", "temporal"};
  std::size_t seeds = 1;  // runs seed, seed+1, ...

  std::optional<std::filesystem::path> data_dir;
  std::optional<std::filesystem::path> checkpoint;
  std::filesystem::path out = ".";

  // Model defaults with d_origin matched to the synthetic embedding width.
  static model::ModelConfig default_model();

  // Applies one setting. Throws ConfigError for an unknown key or a value
  // that does not parse.
  void set(std::string_view key, std::string_view value);
  // Flat `key = value` lines; `#` starts a comment. Throws ConfigError with
  // the line number on malformed lines or unknown keys.
  void load_file(const std::filesystem::path& path);

  static const std::vector<std::string>& keys();
};

model::FeatureSwitches parse_features(std::string_view text);
model::TemporalSwitches parse_temporal(std::string_view text);

}  // namespace dsn::cli
