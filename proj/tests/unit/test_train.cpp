#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include <boost/math/distributions/students_t.hpp>
#include <boost/math/special_functions/beta.hpp>
#include <gtest/gtest.h>

#include "dsn/autodiff/ops.hpp"
#include "dsn/data/synthetic.hpp"
#include "dsn/errors.hpp"
#include "dsn/train/ablation.hpp"
#include "dsn/train/adam.hpp"
#include "dsn/train/loss.hpp"
#include "dsn/train/metrics.hpp"
#include "dsn/train/t_test.hpp"
#include "dsn/train/trainer.hpp"

namespace {

using namespace dsn;
using namespace dsn::train;
using ad::Tensor;

// Brute-force Spearman: rank by counting, then textbook Pearson.
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
  const double n = static_cast<double>(x.size());
  double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += rx[i];
    my += ry[i];
  }
  mx /= n;
  my /= n;
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, bool ties) {
  std::normal_distribution<double> d(0.0, 1.0);
  std::vector<double> v(n);
  for (auto& x : v) x = ties ? std::round(d(rng) * 3.0) : d(rng);
  return v;
}

// ---- loss ----------------------------------------------------------------------

TEST(Mse, Examples) {
  EXPECT_EQ(mse_loss(Tensor::vector({1, 2}), Tensor::vector({1, 2})).item(), 0.0);
  EXPECT_DOUBLE_EQ(mse_loss(Tensor::vector({0, 0}), Tensor::vector({1, 3})).item(), 5.0);
  EXPECT_THROW(mse_loss(Tensor::vector({0}), Tensor::vector({1, 3})), DimensionError);
}

TEST(Mse, GradientIsTwiceTheMeanResidual) {
  auto pred = Tensor({2}, {0.0, 0.0}, true);
  ad::backward(mse_loss(pred, Tensor::vector({1, 3})));
  EXPECT_DOUBLE_EQ(pred.grad()[0], -1.0);
  EXPECT_DOUBLE_EQ(pred.grad()[1], -3.0);
}

// ---- Adam ----------------------------------------------------------------------

TEST(Adam, FirstStepMovesByLearningRateAgainstTheGradientSign) {
  auto theta = Tensor({3}, {0.5, -0.2, 1.0}, true);
  ad::backward(ad::sum(ad::mul(theta, Tensor::vector({3.0, -0.7, 12.0}))));
  Adam adam({{"theta", theta}}, {.lr = 1e-3, .weight_decay = 0.0});
  adam.step();
  EXPECT_NEAR(theta[0], 0.5 - 1e-3, 1e-9);
  EXPECT_NEAR(theta[1], -0.2 + 1e-3, 1e-9);
  EXPECT_NEAR(theta[2], 1.0 - 1e-3, 1e-9);
  EXPECT_EQ(adam.steps(), 1u);
}

TEST(Adam, ZeroGradientWithoutDecayIsIdentity) {
  auto theta = Tensor({3}, {0.5, -0.2, 1.0}, true);
  auto untouched = Tensor({2}, {4.0, 5.0}, true);
  ad::backward(ad::sum(ad::scale(theta, 0.0)));
  Adam adam({{"theta", theta}, {"untouched", untouched}}, {.weight_decay = 0.0});
  for (int i = 0; i < 5; ++i) adam.step();
  EXPECT_EQ(theta[0], 0.5);
  EXPECT_EQ(theta[1], -0.2);
  EXPECT_EQ(theta[2], 1.0);
  EXPECT_EQ(untouched[0], 4.0);
}

TEST(Adam, DecoupledDecayShrinksWithoutGradient) {
  auto theta = Tensor({1}, {2.0}, true);
  Adam adam({{"theta", theta}}, {.lr = 0.1, .weight_decay = 0.5});
  adam.step();
  EXPECT_DOUBLE_EQ(theta[0], 2.0 - 0.1 * 0.5 * 2.0);
}

TEST(Adam, ConvergesOnQuadratic) {
  auto theta = Tensor({1}, {1.0}, true);
  Adam adam({{"theta", theta}}, {.lr = 0.05, .weight_decay = 0.0});
  for (int i = 0; i < 100; ++i) {
    theta.zero_grad();
    ad::backward(ad::sum(ad::mul(theta, theta)));
    adam.step();
  }
  EXPECT_LT(std::abs(theta[0]), 0.1);
}

TEST(Adam, NonFiniteGradientNamesParameterAndChangesNothing) {
  auto good = Tensor({1}, {1.0}, true);
  auto bad = Tensor({1}, {1.0}, true);
  ad::backward(ad::sum(ad::add(good, ad::scale(bad, INFINITY))));
  Adam adam({{"good", good}, {"bad", bad}}, {});
  try {
    adam.step();
    FAIL() << "expected NumericError";
  } catch (const NumericError& e) {
    EXPECT_NE(std::string(e.what()).find("bad"), std::string::npos);
  }
  EXPECT_EQ(good[0], 1.0);
}

// ---- metrics -------------------------------------------------------------------

TEST(Metrics, Examples) {
  const std::vector<double> s = {1.0, 4.0, 2.0, 8.0};
  EXPECT_EQ(mae(s, s), 0.0);
  EXPECT_DOUBLE_EQ(src(s, s), 1.0);
  const std::vector<double> reversed = {-1.0, -4.0, -2.0, -8.0};
  EXPECT_NEAR(src(reversed, s), -1.0, 1e-12);
  EXPECT_DOUBLE_EQ(mae(std::vector<double>{0, 0}, std::vector<double>{1, -3}), 2.0);
}

TEST(Metrics, AverageRanksForTies) {
  const std::vector<double> x = {10, 20, 10, 30, 20, 20};
  EXPECT_EQ(average_ranks(x), (std::vector<double>{1.5, 4, 1.5, 6, 4, 4}));
}

TEST(Metrics, Errors) {
  const std::vector<double> one = {1.0};
  EXPECT_THROW(src(one, one), DimensionError);
  const std::vector<double> flat = {2, 2, 2}, vary = {1, 2, 3};
  EXPECT_THROW(src(flat, vary), NumericError);
  EXPECT_THROW(mae(flat, one), DimensionError);
  EXPECT_THROW(mae(std::vector<double>{}, std::vector<double>{}), DimensionError);
}

TEST(Metrics, SrcMatchesBruteForceOracle) {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 10; ++trial) {
    const auto x = random_vector(1000, rng, trial % 2 == 0);
    const auto y = random_vector(1000, rng, trial % 3 == 0);
    EXPECT_NEAR(src(x, y), spearman_oracle(x, y), 1e-10);
  }
}

TEST(Metrics, RangeAndInvariances) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 20; ++trial) {
    auto x = random_vector(200, rng, trial % 2 == 0);
    auto y = random_vector(200, rng, false);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] += 0.5 * x[i];
    const double base = src(x, y);
    EXPECT_GE(base, -1.0 - 1e-9);
    EXPECT_LE(base, 1.0 + 1e-9);
    auto ex = x, ay = y;
    for (auto& v : ex) v = std::exp(v);
    for (auto& v : ay) v = 3.0 * v - 7.0;
    EXPECT_NEAR(src(ex, ay), base, 1e-12);

    const double m = mae(x, y);
    EXPECT_GE(m, 0.0);
    std::vector<std::size_t> perm(x.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<double> px, py;
    for (auto i : perm) {
      px.push_back(x[i]);
      py.push_back(y[i]);
    }
    EXPECT_NEAR(mae(px, py), m, 1e-12);
  }
}

// ---- paired t-test ---------------------------------------------------------------

TEST(TTest, IdenticalAndConstantShiftSentinels) {
  const std::vector<double> a = {1.0, 2.0, 3.5, 0.2};
  const auto same = paired_t_test(a, a);
  EXPECT_EQ(same.t, 0.0);
  EXPECT_EQ(same.p, 1.0);
  auto shifted = a;
  for (auto& v : shifted) v -= 0.25;
  const auto shift = paired_t_test(a, shifted);
  EXPECT_TRUE(std::isinf(shift.t));
  EXPECT_GT(shift.t, 0.0);
  EXPECT_EQ(shift.p, 0.0);
  EXPECT_THROW(paired_t_test(std::vector<double>{1.0}, std::vector<double>{2.0}), DimensionError);
}

TEST(TTest, StudentSleepData) {
  // Cushny and Peebles sleep data: t = -4.0621, df = 9, p = 0.002833.
  const std::vector<double> drug1 = {0.7, -1.6, -0.2, -1.2, -0.1, 3.4, 3.7, 0.8, 0.0, 2.0};
  const std::vector<double> drug2 = {1.9, 0.8, 1.1, 0.1, -0.1, 4.4, 5.5, 1.6, 4.6, 3.4};
  const auto r = paired_t_test(drug1, drug2);
  EXPECT_EQ(r.dof, 9u);
  EXPECT_NEAR(r.t, -4.0621, 5e-5);
  EXPECT_NEAR(r.p, 0.002833, 1e-6);
}

TEST(TTest, MatchesReferenceDistribution) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0.0, 1.0);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t k = 2 + static_cast<std::size_t>(trial) * 7;
    std::vector<double> a(k), b(k);
    for (std::size_t i = 0; i < k; ++i) {
      a[i] = n(rng);
      b[i] = a[i] + 0.3 + 0.8 * n(rng);
    }
    const auto r = paired_t_test(a, b);
    double mean = 0.0, var = 0.0;
    for (std::size_t i = 0; i < k; ++i) mean += (a[i] - b[i]) / static_cast<double>(k);
    for (std::size_t i = 0; i < k; ++i) var += std::pow(a[i] - b[i] - mean, 2) / static_cast<double>(k - 1);
    const double t = mean / std::sqrt(var / static_cast<double>(k));
    EXPECT_NEAR(r.t, t, 1e-10 * std::max(1.0, std::abs(t)));
    const boost::math::students_t dist(static_cast<double>(k - 1));
    const double p = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(t)));
    EXPECT_NEAR(r.p, p, 1e-10);
  }
}

TEST(TTest, IncompleteBetaMatchesReference) {
  for (double a : {0.5, 1.0, 2.5, 10.0, 60.0}) {
    for (double b : {0.5, 1.0, 3.0, 40.0}) {
      for (double x : {0.0, 1e-6, 0.1, 0.5, 0.77, 0.999, 1.0}) {
        EXPECT_NEAR(incomplete_beta(a, b, x), boost::math::ibeta(a, b, x), 1e-12)
            << a << " " << b << " " << x;
      }
    }
  }
}

// ---- training ------------------------------------------------------------------

const PreparedData& tiny_data() {
  static const auto data = prepare_data(data::generate_synthetic(
      {.n_users = 10, .n_posts = 160, .dim = 6, .cardinalities = {3, 5, 9}, .seed = 21}));
  return data;
}

model::ModelConfig tiny_config() {
  model::ModelConfig c;
  c.d_origin = 6;
  c.d_hidden = 8;
  c.heads = 2;
  c.window_len = 4;
  c.uid_embed_dim = 2;
  bind_data_sizes(c, tiny_data());
  return c;
}

TEST(Trainer, SameSeedSameLosses) {
  const TrainConfig tc{.epochs = 2, .batch_size = 16};
  model::DsnModel a(tiny_config(), tc.seed);
  model::DsnModel b(tiny_config(), tc.seed);
  const auto ra = train_model(a, tiny_data(), tc);
  const auto rb = train_model(b, tiny_data(), tc);
  ASSERT_EQ(ra.epochs.size(), 2u);
  EXPECT_NEAR(ra.epochs[0].train_loss, rb.epochs[0].train_loss, 1e-12);
  EXPECT_EQ(a.params().snapshot(), b.params().snapshot());
}

TEST(Trainer, ZeroLearningRateLeavesParametersAndValidationFlat) {
  const TrainConfig tc{.lr = 0.0, .epochs = 3, .batch_size = 32};
  model::DsnModel m(tiny_config(), 4);
  const auto before = m.params().snapshot();
  const auto r = train_model(m, tiny_data(), tc);
  EXPECT_EQ(m.params().snapshot(), before);
  EXPECT_EQ(r.epochs[0].val_mae, r.epochs[2].val_mae);
  EXPECT_EQ(r.epochs[0].val_loss, r.epochs[1].val_loss);
}

TEST(Trainer, KeepsBestValidationEpoch) {
  const TrainConfig tc{.lr = 5e-3, .epochs = 4, .batch_size = 16};
  model::DsnModel m(tiny_config(), 5);
  const auto r = train_model(m, tiny_data(), tc);
  double best = INFINITY;
  for (const auto& e : r.epochs) best = std::min(best, e.val_mae);
  EXPECT_EQ(r.best_val_mae, best);
  const auto val = evaluate_model(m, tiny_data().corpus, tiny_data().split.val, 64);
  EXPECT_NEAR(val.mae, best, 1e-12);
}

TEST(Trainer, PatienceStopsEarly) {
  const TrainConfig tc{.lr = 0.0, .epochs = 6, .batch_size = 32, .patience = 1};
  model::DsnModel m(tiny_config(), 6);
  EXPECT_EQ(train_model(m, tiny_data(), tc).epochs.size(), 2u);
}

TEST(Trainer, InvalidConfig) {
  EXPECT_THROW((TrainConfig{.lr = -1.0}.validate()), ConfigError);
  EXPECT_THROW((TrainConfig{.batch_size = 0}.validate()), ConfigError);
}

TEST(Evaluate, RepeatableAndMeanBaselineHasNoSrc) {
  model::DsnModel m(tiny_config(), 7);
  const auto a = evaluate_model(m, tiny_data().corpus, tiny_data().split.test, 5);
  const auto b = evaluate_model(m, tiny_data().corpus, tiny_data().split.test, 5);
  EXPECT_EQ(a.predictions, b.predictions);
  EXPECT_EQ(a.mae, b.mae);
  // Other batch sizes change the matmul blocking, not the result beyond roundoff.
  const auto c = evaluate_model(m, tiny_data().corpus, tiny_data().split.test, 64);
  for (std::size_t i = 0; i < a.predictions.size(); ++i) EXPECT_NEAR(a.predictions[i], c.predictions[i], 1e-12);
  ASSERT_EQ(a.attention.size(), a.targets.size());
  EXPECT_EQ(a.attention[0].size(), 3u);

  const auto baseline = evaluate_mean_predictor(tiny_data(), tiny_data().split.test);
  EXPECT_FALSE(baseline.src.has_value());
  double mean = 0.0;
  const auto& train = tiny_data().split.train;
  for (auto i = train.begin; i < train.end; ++i) mean += tiny_data().corpus.labels[i] / train.size();
  for (double p : baseline.predictions) EXPECT_NEAR(p, mean, 1e-12);
}

TEST(Evaluate, PredictionFileColumns) {
  model::DsnModel m(tiny_config(), 8);
  const auto e = evaluate_model(m, tiny_data().corpus, tiny_data().split.test, 64);
  const auto path = std::filesystem::temp_directory_path() / "dsn_unit_predictions.tsv";
  write_predictions(path, tiny_data().corpus, e);
  std::ifstream in(path);
  std::string header, first;
  std::getline(in, header);
  std::getline(in, first);
  EXPECT_EQ(header.substr(0, header.find('\t')), "post_id");
  EXPECT_EQ(std::count(first.begin(), first.end(), '\t'), 3);
  EXPECT_EQ(first.back(), ']');
  EXPECT_EQ(std::count(first.begin(), first.end(), ','), 2);
}

// ---- ablation ------------------------------------------------------------------

TEST(Ablation, GridSizes) {
  const model::ModelConfig base;
  EXPECT_EQ(feature_axis(base).size(), 8u);
  EXPECT_EQ(residual_axis(base, kDefaultRatios).size(), 36u);
  EXPECT_EQ(length_axis(base, kDefaultLengths).size(), 6u);
  EXPECT_EQ(temporal_axis(base).size(), 3u);
  const model::CategoryEncoder all[] = {model::CategoryEncoder::kLevel1, model::CategoryEncoder::kLevel2,
                                        model::CategoryEncoder::kLevel3, model::CategoryEncoder::kConcat,
                                        model::CategoryEncoder::kSum, model::CategoryEncoder::kHce};
  EXPECT_EQ(category_axis(base, all).size(), 6u);
  const std::vector<std::string> axes = {"features", "residual"};
  EXPECT_EQ(make_grid(axes, base).size(), 44u);
  const std::vector<std::string> bogus = {"colour"};
  EXPECT_THROW(make_grid(bogus, base), ConfigError);
}

TEST(Ablation, SinglePointSingleRowAndReproducible) {
  const std::size_t len[] = {2};
  const auto points = length_axis(tiny_config(), len);
  const std::uint64_t seeds[] = {3};
  const TrainConfig tc{.epochs = 1, .batch_size = 32};
  const auto a = ablate(points, seeds, tiny_data(), tc, 1);
  const auto b = ablate(points, seeds, tiny_data(), tc, 1);
  ASSERT_EQ(a.rows.size(), 1u);
  EXPECT_EQ(a.rows[0].status, "ok");
  EXPECT_EQ(a.rows[0].mae, b.rows[0].mae);
  EXPECT_EQ(a.rows[0].src, b.rows[0].src);
}

TEST(Ablation, FailedRowIsRecorded) {
  auto bad = tiny_config();
  bad.heads = 3;  // d_hidden 8 is not divisible
  const std::vector<AblationPoint> points = {{"broken", bad}};
  const std::uint64_t seeds[] = {1, 2};
  const auto r = ablate(points, seeds, tiny_data(), {.epochs = 1}, 2);
  ASSERT_EQ(r.rows.size(), 2u);
  EXPECT_NE(r.rows[0].status, "ok");
  EXPECT_FALSE(r.rows[0].mae.has_value());
  EXPECT_EQ(r.rows[0].seed, 1u);
  EXPECT_FALSE(r.mean_src("broken").has_value());
}

TEST(Ablation, ReportHeaderAndOrdering) {
  AblationReport report;
  model::ModelConfig c;
  report.rows.push_back({"length=4", c, 1, 0.5, 0.7, 1.25, "ok"});
  report.rows.push_back({"length=4", c, 2, 0.6, 0.9, 1.5, "ok"});
  const auto tsv = report.to_tsv();
  EXPECT_EQ(tsv.substr(0, tsv.find('\n')),
            "config_id\tl\tfeatures\talpha\tbeta\tcategory\ttemporal\tMAE\tSRC\tseconds\tseed\tstatus");
  EXPECT_NEAR(*report.mean_src("length=4"), 0.8, 1e-15);
}

}  // namespace
