// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion names
// as arguments to run a subset.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "dsn/autodiff/ops.hpp"
#include "dsn/data/popularity.hpp"
#include "dsn/data/synthetic.hpp"
#include "dsn/model/checkpoint.hpp"
#include "dsn/model/dsn_model.hpp"
#include "dsn/model/gradient_suite.hpp"
#include "dsn/model/layers.hpp"
#include "dsn/train/ablation.hpp"
#include "dsn/train/metrics.hpp"
#include "dsn/train/trainer.hpp"

namespace {

using namespace dsn;
using Clock = std::chrono::steady_clock;

struct Outcome {
  bool passed = false;
  std::string detail;
};

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

// ---- gradient suite ---------------------------------------------------------

Outcome gradient_suite() {
  const auto start = Clock::now();
  const auto results = model::run_gradient_suite(13, 1e-5, 1e-4);
  const double secs = seconds_since(start);
  bool ok = secs < 120.0;
  double worst = 0.0;
  std::string failed;
  for (const auto& r : results) {
    worst = std::max(worst, r.max_rel_error);
    if (!r.passed) failed += " " + r.layer;
    ok = ok && r.passed;
  }
  return {ok, fmt("%zu layers, max rel error %.3g, %.1fs%s%s", results.size(), worst, secs,
                  failed.empty() ? "" : ", failing:", failed.c_str())};
}

// ---- metric oracle ----------------------------------------------------------

// Ranks by counting smaller and equal entries, then Pearson with k-1.
double spearman_oracle(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double less = 0, equal = 0;
      for (std::size_t j = 0; j < v.size(); ++j) {
        if (v[j] < v[i]) ++less;
        if (j != i && v[j] == v[i]) ++equal;
      }
      r[i] = 1.0 + less + 0.5 * equal;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double k = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i] / k;
    my += ry[i] / k;
  }
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return (sxy / (k - 1)) / (std::sqrt(sxx / (k - 1)) * std::sqrt(syy / (k - 1)));
}

Outcome metric_oracle() {
  std::mt19937_64 rng(2024);
  std::normal_distribution<double> n(0.0, 1.0);
  double worst = 0.0;
  std::size_t tied_pairs = 0;
  for (int pair = 0; pair < 100; ++pair) {
    std::vector<double> x(1000), y(1000);
    const bool ties = pair % 2 == 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
      x[i] = n(rng);
      y[i] = 0.4 * x[i] + n(rng);
      if (ties) {
        x[i] = std::round(2.0 * x[i]);
        y[i] = std::round(2.0 * y[i]);
      }
    }
    tied_pairs += ties;
    worst = std::max(worst, std::abs(train::src(x, y) - spearman_oracle(x, y)));
  }
  std::vector<double> s(50), reversed(50);
  for (std::size_t i = 0; i < s.size(); ++i) {
    s[i] = n(rng);
    reversed[i] = -s[i];
  }
  const double self_mae = train::mae(s, s);
  const double self_src = train::src(s, s);
  const double anti_src = train::src(reversed, s);
  const bool ok = worst <= 1e-10 && self_mae == 0.0 && std::abs(self_src - 1.0) <= 1e-12 &&
                  std::abs(anti_src + 1.0) <= 1e-12;
  return {ok, fmt("100 pairs (%zu tied), max |SRC - oracle| %.3g; identical MAE %g SRC %.15g; "
                  "reversed SRC %.15g",
                  tied_pairs, worst, self_mae, self_src, anti_src)};
}

// ---- normalization ------------------------------------------------------------

const data::SyntheticDataset& planted_dataset() {
  static const auto data = data::generate_synthetic({.n_users = 200,
                                                     .n_posts = 10000,
                                                     .dim = 64,
                                                     .cardinalities = {11, 77, 668},
                                                     .noise_sigma = 0.3,
                                                     .seed = 13});
  return data;
}

Outcome normalization() {
  const auto& data = planted_dataset();
  std::size_t violations = 0;
  double worst_slack = INFINITY;
  for (std::size_t i = 0; i < data.posts.size(); ++i) {
    const auto& p = data.posts[i];
    const double err = std::abs(data::normalize_popularity(p.views, p.days) - data.planted[i]);
    const double bound = std::log2(1.0 + 1.0 / static_cast<double>(std::max<std::uint64_t>(p.views, 1)));
    worst_slack = std::min(worst_slack, bound - err);
    if (!(err <= bound)) ++violations;
  }
  return {violations == 0, fmt("%zu posts, %zu outside log2(1+1/r), min slack %.3g",
                               data.posts.size(), violations, worst_slack)};
}

// ---- planted-signal learning ---------------------------------------------------

Outcome planted_signal() {
  const auto start = Clock::now();
  const auto data = train::prepare_data(planted_dataset());
  model::ModelConfig config;
  config.d_origin = 64;
  config.d_hidden = 64;
  train::bind_data_sizes(config, data);
  const train::TrainConfig tc{.epochs = 10, .batch_size = 64, .seed = 13};
  model::DsnModel model(config, tc.seed);
  train::train_model(model, data, tc);
  const auto test = train::evaluate_model(model, data.corpus, data.split.test, 256);
  const auto baseline = train::evaluate_mean_predictor(data, data.split.test);
  const double secs = seconds_since(start);
  const double src = test.src.value_or(-2.0);
  const bool ok = src >= 0.85 && test.mae <= 0.5 * baseline.mae && secs < 600.0;
  return {ok, fmt("test SRC %.4f (>= 0.85), MAE %.4f vs mean-predictor %.4f (ratio %.3f <= 0.5), %.0fs",
                  src, test.mae, baseline.mae, test.mae / baseline.mae, secs)};
}

// ---- ablation directions --------------------------------------------------------

constexpr std::size_t kAblationHidden = 32;
constexpr std::size_t kAblationEpochs = 10;
constexpr std::uint64_t kAblationSeeds[] = {1, 2, 3, 4, 5};

Outcome ablation_directions() {
  const auto start = Clock::now();
  // Same dataset as the planted-signal criterion.
  const auto data = train::prepare_data(planted_dataset());
  model::ModelConfig base;
  base.d_origin = 64;
  base.d_hidden = kAblationHidden;

  std::vector<train::AblationPoint> points;
  const std::size_t lengths[] = {1, 8};
  for (auto& p : train::length_axis(base, lengths)) points.push_back(std::move(p));
  const model::CategoryEncoder singles[] = {model::CategoryEncoder::kLevel1,
                                            model::CategoryEncoder::kLevel2,
                                            model::CategoryEncoder::kLevel3};
  for (auto& p : train::category_axis(base, singles)) points.push_back(std::move(p));
  for (auto& p : train::temporal_axis(base)) {
    if (p.model.temporal.local_lstm && p.model.temporal.long_attention) continue;  // same as l=8
    points.push_back(std::move(p));
  }
  const train::TrainConfig tc{.epochs = kAblationEpochs, .batch_size = 64};
  const auto report = train::ablate(points, kAblationSeeds, data, tc, 1);

  auto id_of = [&](auto pred) {
    for (const auto& p : points) {
      if (pred(p.model)) return p.config_id;
    }
    return std::string();
  };
  const auto full = id_of([](const model::ModelConfig& c) {
    return c.window_len == 8 && c.category_encoder == model::CategoryEncoder::kHce &&
           c.temporal.local_lstm && c.temporal.long_attention;
  });
  const auto l1 = id_of([](const model::ModelConfig& c) { return c.window_len == 1; });
  const auto no_lstm = id_of([](const model::ModelConfig& c) { return !c.temporal.local_lstm; });
  const auto no_attn = id_of([](const model::ModelConfig& c) { return !c.temporal.long_attention; });

  std::ostringstream detail;
  bool ok = true;
  auto per_seed = [&](const std::string& id) {
    std::vector<double> v;
    for (const auto& r : report.rows) {
      if (r.config_id == id) v.push_back(r.src.value_or(NAN));
    }
    return v;
  };
  auto compare = [&](const std::string& label, const std::string& better, const std::string& worse) {
    const auto a = report.mean_src(better), b = report.mean_src(worse);
    const bool holds = a && b && *a >= *b;
    ok = ok && holds;
    detail << "\n    " << (holds ? "ok  " : "FAIL") << " " << label << ": " << better << " "
           << fmt("%.4f", a.value_or(NAN)) << " >= " << worse << " " << fmt("%.4f", b.value_or(NAN));
    const auto sa = per_seed(better), sb = per_seed(worse);
    for (std::size_t i = 0; i < std::min(sa.size(), sb.size()); ++i) {
      if (!(sa[i] >= sb[i])) {
        spdlog::warn("ablation {}: seed {} violates ({} {:.4f} < {} {:.4f})", label, kAblationSeeds[i],
                     better, sa[i], worse, sb[i]);
      }
    }
  };
  compare("length", full, l1);
  std::string best_single;
  double best_single_src = -INFINITY;
  for (const auto& p : points) {
    if (p.model.category_encoder == model::CategoryEncoder::kHce) continue;
    const auto m = report.mean_src(p.config_id);
    if (m && *m > best_single_src) {
      best_single_src = *m;
      best_single = p.config_id;
    }
  }
  compare("category", full, best_single);
  compare("temporal", full, no_lstm);
  compare("temporal", full, no_attn);
  for (const auto& r : report.rows) {
    if (r.status != "ok") {
      ok = false;
      detail << "\n    row " << r.config_id << " seed " << r.seed << ": " << r.status;
    }
  }
  return {ok, fmt("%zu configs x %zu seeds, %zu posts, d_hidden %zu, %.0fs", points.size(),
                  std::size(kAblationSeeds), data.corpus.size(), kAblationHidden, seconds_since(start)) +
                  detail.str()};
}

// ---- determinism ----------------------------------------------------------------

Outcome determinism() {
  const auto data = train::prepare_data(data::generate_synthetic(
      {.n_users = 30, .n_posts = 600, .dim = 16, .cardinalities = {4, 8, 16}, .seed = 7}));
  model::ModelConfig config;
  config.d_origin = 16;
  config.d_hidden = 16;
  train::bind_data_sizes(config, data);
  const train::TrainConfig tc{.epochs = 2, .batch_size = 32, .seed = 99};

  auto train_once = [&] {
    model::DsnModel m(config, tc.seed);
    train::train_model(m, data, tc);
    return model::encode_checkpoint(m.config(), m.params());
  };
  const auto a = train_once();
  const auto b = train_once();

  const std::size_t lengths[] = {1, 4};
  const auto points = train::length_axis(config, lengths);
  const std::uint64_t seeds[] = {3, 4};
  const train::TrainConfig row_tc{.epochs = 1, .batch_size = 32};
  const auto ra = train::ablate(points, seeds, data, row_tc, 1);
  const auto rb = train::ablate(points, seeds, data, row_tc, 2);
  bool rows_equal = ra.rows.size() == rb.rows.size();
  for (std::size_t i = 0; rows_equal && i < ra.rows.size(); ++i) {
    const auto& x = ra.rows[i];
    const auto& y = rb.rows[i];
    rows_equal = x.config_id == y.config_id && x.seed == y.seed && x.mae == y.mae && x.src == y.src &&
                 x.status == y.status;
  }
  const bool ok = a == b && rows_equal;
  return {ok, fmt("checkpoints %s (%zu bytes); %zu report rows %s (seconds column excluded)",
                  a == b ? "byte-equal" : "DIFFER", a.size(), ra.rows.size(),
                  rows_equal ? "identical" : "DIFFER")};
}

// ---- closed gates ---------------------------------------------------------------

Outcome closed_gates() {
  std::mt19937_64 rng(31);
  std::normal_distribution<double> n(0.0, 1.0);
  auto input = [&](std::size_t rows, std::size_t cols) {
    std::vector<double> v(rows * cols);
    for (auto& x : v) x = n(rng);
    return ad::Tensor({rows, cols}, std::move(v));
  };
  constexpr std::size_t d = 16;
  auto closed = [&](model::GateParams g) {
    g.b_gate = ad::Tensor::filled({d}, -20.0);
    return g;
  };

  model::GrnParams grn;
  grn.w_inner = model::make_weight({d, d}, d, rng);
  grn.b_inner = ad::Tensor::zeros({d});
  grn.w_outer = model::make_weight({d, d}, d, rng);
  grn.b_outer = ad::Tensor::zeros({d});
  grn.gate = closed(model::make_gate("grn", d, false, rng, nullptr));
  grn.norm = {ad::Tensor::filled({d}, 1.0), ad::Tensor::zeros({d})};
  const auto x = input(32, d);
  const auto grn_out = model::grn(x, grn);
  const auto ln = ad::layer_norm(x, grn.norm.gain, grn.norm.bias);
  double grn_err = 0.0;
  for (std::size_t i = 0; i < ln.numel(); ++i) grn_err = std::max(grn_err, std::abs(grn_out[i] - ln[i]));

  const std::vector<std::size_t> card = {11, 77, 668};
  model::CategoryParams hce;
  hce.initial = model::make_weight({1, d}, 1, rng);
  for (std::size_t k = 0; k < card.size(); ++k) {
    hce.tables.push_back(model::make_weight({card[k], d}, 1, rng));
    hce.gates.push_back(closed(model::make_gate("hce", d, true, rng, nullptr)));
    hce.fuse.push_back(model::make_weight({2 * d, d}, 2 * d, rng));
  }
  const auto& tree = planted_dataset().tree;
  std::vector<std::int32_t> ids;
  std::vector<std::size_t> leaves;
  for (std::int32_t leaf = 0; leaf < 668; leaf += 7) {
    const auto path = tree.path_of_leaf(leaf);
    ids.insert(ids.end(), path.begin(), path.end());
    leaves.push_back(static_cast<std::size_t>(leaf));
  }
  const auto hce_out = model::hce_forward(ids, card, hce);
  const ad::Tensor parts[] = {ad::gather_rows(hce.tables[2], leaves), ad::Tensor::zeros({leaves.size(), d})};
  const auto expected = ad::matmul(ad::concat_cols(parts), hce.fuse[2]);
  double hce_err = 0.0;
  for (std::size_t i = 0; i < expected.numel(); ++i) {
    hce_err = std::max(hce_err, std::abs(hce_out[i] - expected[i]));
  }
  const bool ok = grn_err <= 1e-8 && hce_err <= 1e-8;
  return {ok, fmt("max |GRN - LayerNorm| %.3g, max |HCE - [E3 | 0] W3| %.3g (tolerance 1e-8)", grn_err,
                  hce_err)};
}

struct Criterion {
  const char* name;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  spdlog::set_level(spdlog::level::warn);
  const std::vector<Criterion> criteria = {
      {"gradient-suite", gradient_suite},   {"metric-oracle", metric_oracle},
      {"normalization", normalization},     {"planted-signal", planted_signal},
      {"ablation-directions", ablation_directions}, {"determinism", determinism},
      {"closed-gates", closed_gates},
  };
  std::vector<std::string> wanted(argv + 1, argv + argc);
  int failures = 0;
  for (const auto& c : criteria) {
    if (!wanted.empty() && std::find(wanted.begin(), wanted.end(), c.name) == wanted.end()) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    std::printf("%s  %-20s %s\n", o.passed ? "PASS" : "FAIL", c.name, o.detail.c_str());
    std::fflush(stdout);
    failures += !o.passed;
  }
  return failures == 0 ? 0 : 1;
}
