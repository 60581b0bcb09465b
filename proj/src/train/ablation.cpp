#include "dsn/train/ablation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <spdlog/spdlog.h>

#include "dsn/errors.hpp"

namespace dsn::train {

std::string features_label(const model::FeatureSwitches& f) {
  std::string s;
  auto add = [&](bool on, const char* name) {
    if (!on) return;
    if (!s.empty()) s += '+';
    s += name;
  };
  add(f.image, "img");
  add(f.text, "txt");
  add(f.category, "cat");
  return s.empty() ? "user" : s;
}

std::string temporal_label(const model::TemporalSwitches& t) {
  if (t.local_lstm && t.long_attention) return "full";
  if (t.local_lstm) return "no_attn";
  if (t.long_attention) return "no_lstm";
  return "none";
}

namespace {

std::string ratio_text(double r) {
  std::ostringstream os;
  os << r;
  return os.str();
}

}  // namespace

std::vector<AblationPoint> length_axis(const model::ModelConfig& base,
                                       std::span<const std::size_t> lengths) {
  std::vector<AblationPoint> out;
  for (auto l : lengths) {
    auto m = base;
    m.window_len = l;
    out.push_back({"l=" + std::to_string(l), m});
  }
  return out;
}

std::vector<AblationPoint> feature_axis(const model::ModelConfig& base) {
  std::vector<AblationPoint> out;
  for (int mask = 0; mask < 8; ++mask) {
    auto m = base;
    m.features = {(mask & 1) != 0, (mask & 2) != 0, (mask & 4) != 0};
    out.push_back({"features=" + features_label(m.features), m});
  }
  return out;
}

std::vector<AblationPoint> residual_axis(const model::ModelConfig& base,
                                         std::span<const double> ratios) {
  std::vector<AblationPoint> out;
  for (double a : ratios) {
    for (double b : ratios) {
      auto m = base;
      m.alpha = a;
      m.beta = b;
      out.push_back({"alpha=" + ratio_text(a) + ",beta=" + ratio_text(b), m});
    }
  }
  return out;
}

std::vector<AblationPoint> category_axis(const model::ModelConfig& base,
                                         std::span<const model::CategoryEncoder> encoders) {
  std::vector<AblationPoint> out;
  for (auto e : encoders) {
    auto m = base;
    m.category_encoder = e;
    out.push_back({"category=" + std::string(model::to_string(e)), m});
  }
  return out;
}

std::vector<AblationPoint> temporal_axis(const model::ModelConfig& base) {
  std::vector<AblationPoint> out;
  for (auto t : {model::TemporalSwitches{true, true}, model::TemporalSwitches{false, true},
                 model::TemporalSwitches{true, false}}) {
    auto m = base;
    m.temporal = t;
    out.push_back({"temporal=" + temporal_label(t), m});
  }
  return out;
}

std::vector<AblationPoint> make_grid(std::span<const std::string> axes,
                                     const model::ModelConfig& base) {
  static constexpr model::CategoryEncoder kAllEncoders[] = {
      model::CategoryEncoder::kLevel1, model::CategoryEncoder::kLevel2,
      model::CategoryEncoder::kLevel3, model::CategoryEncoder::kConcat,
      model::CategoryEncoder::kSum,    model::CategoryEncoder::kHce};
  std::vector<AblationPoint> out;
  for (const auto& axis : axes) {
    std::vector<AblationPoint> part;
    if (axis == "length") {
      part = length_axis(base, kDefaultLengths);
    } else if (axis == "features") {
      part = feature_axis(base);
    } else if (axis == "residual") {
      part = residual_axis(base, kDefaultRatios);
    } else if (axis == "category") {
      part = category_axis(base, kAllEncoders);
    } else if (axis == "temporal") {
      part = temporal_axis(base);
    } else {
      throw ConfigError("unknown ablation axis '" + axis +
                        "' (expected length, features, residual, category or temporal)");
    }
    out.insert(out.end(), part.begin(), part.end());
  }
  return out;
}

std::string AblationReport::to_tsv() const {
  std::ostringstream os;
  os.precision(17);
  os << "config_id\tl\tfeatures\talpha\tbeta\tcategory\ttemporal\tMAE\tSRC\tseconds\tseed\tstatus\n";
  for (const auto& r : rows) {
    os << r.config_id << '\t' << r.model.window_len << '\t' << features_label(r.model.features)
       << '\t' << r.model.alpha << '\t' << r.model.beta << '\t'
       << model::to_string(r.model.category_encoder) << '\t' << temporal_label(r.model.temporal)
       << '\t';
    if (r.mae) os << *r.mae; else os << "nan";
    os << '\t';
    if (r.src) os << *r.src; else os << "nan";
    os << '\t';
    os.precision(3);
    os << std::fixed << r.seconds << std::defaultfloat;
    os.precision(17);
    os << '\t' << r.seed << '\t' << r.status << '\n';
  }
  return os.str();
}

void AblationReport::write_tsv(const std::filesystem::path& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw DataError("cannot open " + path.string() + " for writing");
  out << to_tsv();
  if (!out) throw DataError("failed writing " + path.string());
}

std::optional<double> AblationReport::mean_src(const std::string& config_id) const {
  double total = 0.0;
  std::size_t n = 0;
  for (const auto& r : rows) {
    if (r.config_id != config_id || !r.src) continue;
    total += *r.src;
    ++n;
  }
  if (n == 0) return std::nullopt;
  return total / static_cast<double>(n);
}

namespace {

AblationRow run_row(const AblationPoint& point, std::uint64_t seed, const PreparedData& data,
                    TrainConfig train_config) {
  AblationRow row;
  row.config_id = point.config_id;
  row.model = point.model;
  row.seed = seed;
  const auto start = std::chrono::steady_clock::now();
  try {
    auto cfg = point.model;
    bind_data_sizes(cfg, data);
    train_config.seed = seed;
    model::DsnModel model(cfg, seed);
    train_model(model, data, train_config);
    const auto test = evaluate_model(model, data.corpus, data.split.test, train_config.batch_size);
    row.mae = test.mae;
    row.src = test.src;
  } catch (const std::exception& e) {
    row.status = std::string("error: ") + e.what();
    row.mae.reset();
    row.src.reset();
  }
  row.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return row;
}

}  // namespace

AblationReport ablate(std::span<const AblationPoint> points, std::span<const std::uint64_t> seeds,
                      const PreparedData& data, const TrainConfig& train_config,
                      std::size_t jobs) {
  train_config.validate();
  struct Task {
    std::size_t point;
    std::uint64_t seed;
  };
  std::vector<Task> tasks;
  for (std::size_t p = 0; p < points.size(); ++p) {
    for (auto s : seeds) tasks.push_back({p, s});
  }
  AblationReport report;
  report.rows.resize(tasks.size());
  std::atomic<std::size_t> next{0};
  std::mutex log_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < tasks.size(); i = next++) {
      const auto& task = tasks[i];
      report.rows[i] = run_row(points[task.point], task.seed, data, train_config);
      const auto& row = report.rows[i];
      std::lock_guard lock(log_mutex);
      spdlog::info("ablation {}/{}  {} seed {}  {}  ({:.1f}s)", i + 1, tasks.size(),
                   row.config_id, row.seed,
                   row.status == "ok" ? "MAE " + std::to_string(row.mae.value_or(0.0)) : row.status,
                   row.seconds);
    }
  };
  const auto threads = std::max<std::size_t>(1, std::min(jobs, tasks.size()));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  std::stable_sort(report.rows.begin(), report.rows.end(), [](const auto& a, const auto& b) {
    return a.config_id != b.config_id ? a.config_id < b.config_id : a.seed < b.seed;
  });
  return report;
}

}  // namespace dsn::train
