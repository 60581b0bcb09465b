#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "dsn/data/post_record.hpp"
#include "dsn/data/stats.hpp"
#include "dsn/data/synthetic.hpp"
#include "dsn/data/windows.hpp"
#include "dsn/model/batch_builder.hpp"
#include "dsn/model/dsn_model.hpp"

namespace dsn::train {

struct TrainConfig {
  double lr = 1e-3;
  double weight_decay = 1e-4;
  std::size_t epochs = 10;
  std::size_t batch_size = 64;
  std::uint64_t seed = 13;
  std::size_t patience = 0;  // epochs without val improvement before stopping; 0 = off

  void validate() const;  // throws ConfigError
};

// A sorted stream, its chronological split and the statistics fitted on
// the training prefix.
struct PreparedData {
  model::Corpus corpus;
  data::ChronoSplit split;
  data::NormStats stats;
  data::CategoryTree tree;
};

// Throws DataError when a post's category path disagrees with the tree.
PreparedData prepare_data(std::vector<data::PostRecord> posts, data::EmbeddingMatrix image,
                          data::EmbeddingMatrix text, data::CategoryTree tree);
PreparedData prepare_data(const data::SyntheticDataset& dataset);
// Reads a dataset directory; both embedding files must have width `d_origin`.
PreparedData load_dataset(const data::DatasetPaths& paths, std::uint32_t d_origin);

// Copies the data-dependent sizes (uid vocabulary, tree cardinalities) into
// a model config.
void bind_data_sizes(model::ModelConfig& config, const PreparedData& data);

struct EpochLog {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_mae = 0.0;
  std::optional<double> val_src;  // undefined for constant predictions
};

struct TrainResult {
  std::vector<EpochLog> epochs;
  std::size_t best_epoch = 0;
  double best_val_mae = 0.0;
};

// Mini-batch training with a seeded shuffle per epoch. The parameters end
// at the epoch with the lowest validation MAE. Throws NumericError on a
// non-finite loss or gradient.
TrainResult train_model(model::DsnModel& model, const PreparedData& data,
                        const TrainConfig& config);

struct Evaluation {
  std::vector<std::size_t> targets;  // stream indices
  std::vector<double> predictions;
  std::vector<double> labels;
  // Per target: attention over the l-1 neighbors averaged across heads,
  // zero on padding. Empty when attention is switched off.
  std::vector<std::vector<double>> attention;
  double mae = 0.0;
  double mse = 0.0;
  std::optional<double> src;
};

// Eval-mode forward over every target in `range`.
Evaluation evaluate_model(model::DsnModel& model, const model::Corpus& corpus,
                          data::IndexRange range, std::size_t batch_size);

// Predicts the training-split mean label for every post in `range`. SRC is
// undefined for a constant predictor and is left empty.
Evaluation evaluate_mean_predictor(const PreparedData& data, data::IndexRange range);

// Tab-separated: post_id, s, s_hat, attention as "[w1,w2,...]".
void write_predictions(const std::filesystem::path& path, const model::Corpus& corpus,
                       const Evaluation& evaluation);

}  // namespace dsn::train
