#include "dsn/train/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <string>

#include <spdlog/spdlog.h>

#include "dsn/errors.hpp"
#include "dsn/train/adam.hpp"
#include "dsn/train/loss.hpp"
#include "dsn/train/metrics.hpp"

namespace dsn::train {

void TrainConfig::validate() const {
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ConfigError("learning rate must be non-negative");
  if (!(weight_decay >= 0.0)) throw ConfigError("weight decay must be non-negative");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  if (epochs == 0) throw ConfigError("at least one epoch is required");
}

PreparedData prepare_data(std::vector<data::PostRecord> posts, data::EmbeddingMatrix image,
                          data::EmbeddingMatrix text, data::CategoryTree tree) {
  tree.validate();
  for (const auto& p : posts) {
    if (!tree.consistent(p.category)) {
      throw DataError("post " + p.post_id + ": category path (" + std::to_string(p.category[0]) +
                      ", " + std::to_string(p.category[1]) + ", " +
                      std::to_string(p.category[2]) + ") does not follow the category tree");
    }
  }
  data::sort_chronologically(posts);
  PreparedData out;
  out.split = data::chronological_split(posts.size());
  out.stats = data::fit_stats(std::span(posts).subspan(out.split.train.begin,
                                                       out.split.train.size()));
  out.corpus = model::Corpus::assemble(std::move(posts), std::move(image), std::move(text),
                                       out.stats);
  out.tree = std::move(tree);
  return out;
}

PreparedData prepare_data(const data::SyntheticDataset& dataset) {
  return prepare_data(dataset.posts, dataset.image, dataset.text, dataset.tree);
}

PreparedData load_dataset(const data::DatasetPaths& paths, std::uint32_t d_origin) {
  return prepare_data(data::read_posts(paths.posts), data::read_embedding_file(paths.image, d_origin),
                      data::read_embedding_file(paths.text, d_origin), data::read_tree(paths.tree));
}

void bind_data_sizes(model::ModelConfig& config, const PreparedData& data) {
  config.uid_vocab_size = data.stats.uid_vocab_size();
  config.level_cardinalities.assign(data.tree.cardinalities.begin(), data.tree.cardinalities.end());
}

namespace {

std::vector<std::size_t> range_indices(data::IndexRange range) {
  std::vector<std::size_t> out(range.size());
  std::iota(out.begin(), out.end(), range.begin);
  return out;
}

std::optional<double> try_src(std::span<const double> pred, std::span<const double> truth) {
  try {
    return src(pred, truth);
  } catch (const NumericError&) {
    return std::nullopt;
  } catch (const DimensionError&) {
    return std::nullopt;
  }
}

void finish_metrics(Evaluation& e) {
  e.mae = mae(e.predictions, e.labels);
  double sq = 0.0;
  for (std::size_t i = 0; i < e.labels.size(); ++i) {
    sq += (e.predictions[i] - e.labels[i]) * (e.predictions[i] - e.labels[i]);
  }
  e.mse = sq / static_cast<double>(e.labels.size());
  e.src = try_src(e.predictions, e.labels);
}

}  // namespace

TrainResult train_model(model::DsnModel& model, const PreparedData& data,
                        const TrainConfig& config) {
  config.validate();
  auto& params = model.params();
  Adam adam(params.named, AdamConfig{config.lr, config.weight_decay});
  std::mt19937_64 shuffle_rng(config.seed);
  auto order = range_indices(data.split.train);
  const auto length = model.config().window_len;

  TrainResult result;
  std::vector<std::vector<double>> best;
  std::size_t since_best = 0;
  for (std::size_t epoch = 1; epoch <= config.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), shuffle_rng);
    double loss_total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += config.batch_size) {
      const auto count = std::min(config.batch_size, order.size() - start);
      const auto batch = model::build_batch(data.corpus, std::span(order).subspan(start, count),
                                            length, model.config().features);
      params.zero_grad();
      const auto out = model.forward(batch, model::Mode::kTrain);
      const auto loss = mse_loss(out.predictions, batch.labels);
      if (!std::isfinite(loss.item())) {
        throw NumericError("non-finite training loss in epoch " + std::to_string(epoch));
      }
      ad::backward(loss);
      adam.step();
      loss_total += loss.item() * static_cast<double>(count);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_total / static_cast<double>(order.size());
    const auto val = evaluate_model(model, data.corpus, data.split.val, config.batch_size);
    log.val_loss = val.mse;
    log.val_mae = val.mae;
    log.val_src = val.src;
    result.epochs.push_back(log);
    spdlog::info("epoch {:>3}  train_loss {:.6f}  val_mae {:.6f}  val_src {}", epoch,
                 log.train_loss, log.val_mae,
                 log.val_src ? std::to_string(*log.val_src) : std::string("undefined"));

    if (result.best_epoch == 0 || log.val_mae < result.best_val_mae) {
      result.best_epoch = epoch;
      result.best_val_mae = log.val_mae;
      best = params.snapshot();
      since_best = 0;
    } else if (config.patience > 0 && ++since_best >= config.patience) {
      spdlog::info("early stop after epoch {}", epoch);
      break;
    }
  }
  params.restore(best);
  params.zero_grad();
  return result;
}

Evaluation evaluate_model(model::DsnModel& model, const model::Corpus& corpus,
                          data::IndexRange range, std::size_t batch_size) {
  if (range.size() == 0) throw DataError("cannot evaluate an empty split");
  if (batch_size == 0) throw ConfigError("batch size must be at least 1");
  Evaluation e;
  e.targets = range_indices(range);
  e.labels.reserve(range.size());
  e.predictions.reserve(range.size());
  const auto length = model.config().window_len;
  for (std::size_t start = 0; start < e.targets.size(); start += batch_size) {
    const auto count = std::min(batch_size, e.targets.size() - start);
    const auto batch = model::build_batch(corpus, std::span(e.targets).subspan(start, count),
                                          length, model.config().features);
    const auto out = model.forward(batch, model::Mode::kEval);
    const auto pred = out.predictions.values();
    const auto labels = batch.labels.values();
    e.predictions.insert(e.predictions.end(), pred.begin(), pred.end());
    e.labels.insert(e.labels.end(), labels.begin(), labels.end());
    const auto& att = out.attention;
    if (att.weights.empty()) continue;
    for (std::size_t b = 0; b < count; ++b) {
      std::vector<double> mean(att.neighbors, 0.0);
      for (std::size_t h = 0; h < att.heads; ++h) {
        for (std::size_t j = 0; j < att.neighbors; ++j) {
          mean[j] += att.weights[(b * att.heads + h) * att.neighbors + j];
        }
      }
      for (auto& w : mean) w /= static_cast<double>(att.heads);
      e.attention.push_back(std::move(mean));
    }
  }
  finish_metrics(e);
  return e;
}

Evaluation evaluate_mean_predictor(const PreparedData& data, data::IndexRange range) {
  if (range.size() == 0) throw DataError("cannot evaluate an empty split");
  const auto& labels = data.corpus.labels;
  const auto train = data.split.train;
  const double mean_label =
      std::accumulate(labels.begin() + static_cast<std::ptrdiff_t>(train.begin),
                      labels.begin() + static_cast<std::ptrdiff_t>(train.end), 0.0) /
      static_cast<double>(train.size());
  Evaluation e;
  e.targets = range_indices(range);
  for (auto t : e.targets) {
    e.labels.push_back(labels[t]);
    e.predictions.push_back(mean_label);
  }
  finish_metrics(e);
  e.src.reset();
  return e;
}

void write_predictions(const std::filesystem::path& path, const model::Corpus& corpus,
                       const Evaluation& evaluation) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out.precision(10);
  out << "post_id\ts\ts_hat\tattention\n";
  for (std::size_t i = 0; i < evaluation.targets.size(); ++i) {
    out << corpus.posts[evaluation.targets[i]].post_id << '\t' << evaluation.labels[i] << '\t'
        << evaluation.predictions[i] << "\t[";
    if (i < evaluation.attention.size()) {
      const auto& w = evaluation.attention[i];
      for (std::size_t j = 0; j < w.size(); ++j) out << (j ? "," : "") << w[j];
    }
    out << "]\n";
  }
  if (!out) throw DataError("failed writing " + path.string());
}

}  // namespace dsn::train
