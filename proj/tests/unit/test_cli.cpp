#include <filesystem>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "dsn/cli/dispatch.hpp"
#include "dsn/cli/run_config.hpp"
#include "dsn/errors.hpp"

namespace {

using namespace dsn::cli;
namespace fs = std::filesystem;

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "dsn");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = dispatch(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path fresh(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("dsn_cli_" + name);
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

TEST(Cli, UnknownFlagIsUsageErrorAndWritesNothing) {
  const auto dir = fresh("unknown");
  const auto r = run({"gen-data", "--out", dir.string(), "--bogus", "1"});
  EXPECT_EQ(r.code, kExitUsage);
  EXPECT_FALSE(fs::exists(dir));
  EXPECT_NE(r.err.find("gen-data"), std::string::npos);
}

TEST(Cli, MissingSubcommandAndBadValues) {
  EXPECT_EQ(run({}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--heads", "three"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--features", "img,sound"}).code, kExitUsage);
  EXPECT_EQ(run({"train", "--alpha", "2"}).code, kExitUsage);
}

TEST(Cli, MissingDataDirectoryIsDataError) {
  const auto out = fresh("missing_data");
  fs::create_directories(out);
  const auto r = run({"train", "--data", (out / "absent").string(), "--out", out.string()});
  EXPECT_EQ(r.code, kExitData);
}

TEST(Cli, GenDataIsDeterministic) {
  const auto a = fresh("gen_a");
  const auto b = fresh("gen_b");
  for (const auto& dir : {a, b}) {
    EXPECT_EQ(run({"gen-data", "--posts", "80", "--users", "6", "--d-origin", "8", "--seed", "4", "--out",
                   dir.string()})
                  .code,
              kExitOk);
  }
  std::size_t files = 0;
  for (const auto& entry : fs::directory_iterator(a)) {
    ++files;
    EXPECT_EQ(slurp(entry.path()), slurp(b / entry.path().filename())) << entry.path();
  }
  EXPECT_EQ(files, 4u);
}

TEST(Cli, TrainThenEvaluate) {
  const auto data = fresh("pipeline_data");
  const auto out = fresh("pipeline_out");
  ASSERT_EQ(run({"gen-data", "--posts", "150", "--users", "8", "--d-origin", "8", "--out", data.string()}).code,
            kExitOk);
  const std::vector<std::string> model = {"--data", data.string(), "--out", out.string(), "--d-origin", "8",
                                          "--d-hidden", "8", "--heads", "2", "--l", "3"};
  auto train_args = model;
  train_args.insert(train_args.begin(), {"train", "--epochs", "2", "--batch-size", "32"});
  const auto trained = run(train_args);
  ASSERT_EQ(trained.code, kExitOk) << trained.err;
  EXPECT_TRUE(fs::exists(out / "model.dsnp"));
  EXPECT_TRUE(fs::exists(out / "train_log.tsv"));
  EXPECT_NE(trained.out.find("test MAE"), std::string::npos);

  auto eval_args = model;
  eval_args.insert(eval_args.begin(), "eval");
  const auto first = run(eval_args);
  ASSERT_EQ(first.code, kExitOk) << first.err;
  const auto predictions = slurp(out / "predictions.tsv");
  EXPECT_EQ(run(eval_args).code, kExitOk);
  EXPECT_EQ(slurp(out / "predictions.tsv"), predictions);

  // A checkpoint from one config does not load into another.
  auto mismatched = eval_args;
  mismatched.insert(mismatched.end(), {"--alpha", "0.4"});
  EXPECT_EQ(run(mismatched).code, kExitUsage);
}

TEST(Cli, GradCheckPasses) {
  const auto r = run({"grad-check"});
  EXPECT_EQ(r.code, kExitOk) << r.out << r.err;
  EXPECT_NE(r.out.find("full_model"), std::string::npos);
}

TEST(RunConfig, SettingsAndErrors) {
  RunConfig rc;
  rc.set("l", "16");
  rc.set("features", "img,cat");
  rc.set("temporal", "attn");
  rc.set("category", "sum");
  EXPECT_EQ(rc.model.window_len, 16u);
  EXPECT_FALSE(rc.model.features.text);
  EXPECT_TRUE(rc.model.features.category);
  EXPECT_FALSE(rc.model.temporal.local_lstm);
  EXPECT_EQ(rc.model.category_encoder, dsn::model::CategoryEncoder::kSum);
  EXPECT_THROW(rc.set("nonsense", "1"), dsn::ConfigError);
  EXPECT_THROW(rc.set("epochs", "-2"), dsn::ConfigError);
  EXPECT_THROW(parse_features("img,img2"), dsn::ConfigError);
  const auto none = parse_features("none");
  EXPECT_EQ(none.active_count(), 0u);
}

TEST(RunConfig, FileWithCommentsAndLineNumbers) {
  const auto dir = fresh("config");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "good.cfg");
    f << "# desk run\nd_hidden = 32\n\nepochs = 3  # short\n";
  }
  RunConfig rc;
  rc.load_file(dir / "good.cfg");
  EXPECT_EQ(rc.model.d_hidden, 32u);
  EXPECT_EQ(rc.train.epochs, 3u);
  {
    std::ofstream f(dir / "bad.cfg");
    f << "epochs = 3\nwhat is this\n";
  }
  try {
    rc.load_file(dir / "bad.cfg");
    FAIL();
  } catch (const dsn::ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find(":2:"), std::string::npos) << e.what();
  }
}

TEST(Logging, LevelNames) {
  EXPECT_NO_THROW(configure_logging(nullptr));
  EXPECT_NO_THROW(configure_logging("quiet"));
  EXPECT_NO_THROW(configure_logging("debug"));
  EXPECT_THROW(configure_logging("loud"), dsn::ConfigError);
  configure_logging("quiet");
}

}  // namespace
