#include "dsn/cli/dispatch.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "dsn/cli/run_config.hpp"
#include "dsn/data/synthetic.hpp"
#include "dsn/errors.hpp"
#include "dsn/model/checkpoint.hpp"
#include "dsn/model/gradient_suite.hpp"
#include "dsn/train/ablation.hpp"
#include "dsn/train/metrics.hpp"
#include "dsn/train/t_test.hpp"
#include "dsn/train/trainer.hpp"

namespace dsn::cli {
namespace fs = std::filesystem;

void configure_logging(const char* level) {
  const std::string v = level ? level : "info";
  if (v == "quiet") spdlog::set_level(spdlog::level::warn);
  else if (v == "info" || v.empty()) spdlog::set_level(spdlog::level::info);
  else if (v == "debug") spdlog::set_level(spdlog::level::debug);
  else throw ConfigError("DSN_LOG must be quiet, info or debug, got '" + v + "'");
}

namespace {

using Overrides = std::vector<std::pair<std::string, std::string>>;

struct Flag {
  const char* name;
  const char* key;
  const char* help;
};

constexpr Flag kFlags[] = {
    {"--seed", "seed", "random seed for everything (default 13)"},
    {"--jobs", "jobs", "parallel ablation workers"},
    {"--posts", "posts", "number of synthetic posts"},
    {"--users", "users", "number of synthetic users"},
    {"--l", "l", "window length"},
    {"--alpha", "alpha", "visual residual ratio"},
    {"--beta", "beta", "textual residual ratio"},
    {"--features", "features", "modalities, e.g. img,txt,cat or none"},
    {"--temporal", "temporal", "temporal components, e.g. lstm,attn or none"},
    {"--category", "category", "category encoder: level1|level2|level3|concat|sum|hce"},
    {"--d-origin", "d_origin", "input embedding width"},
    {"--d-hidden", "d_hidden", "hidden width"},
    {"--heads", "heads", "attention heads"},
    {"--dropout", "dropout", "dropout rate"},
    {"--lr", "lr", "learning rate"},
    {"--weight-decay", "weight_decay", "decoupled weight decay"},
    {"--epochs", "epochs", "training epochs"},
    {"--batch-size", "batch_size", "mini-batch size"},
    {"--patience", "patience", "early-stop patience in epochs (0 = off)"},
    {"--axes", "axes", "ablation axes: length,features,residual,category,temporal"},
    {"--seeds", "seeds", "ablation seeds per grid point"},
    {"--data", "data", "dataset directory"},
    {"--checkpoint", "checkpoint", "checkpoint file"},
    {"--out", "out", "output directory"},
};

void ensure_output_dir(const fs::path& dir) {
  if (fs::is_directory(dir)) return;
  const auto parent = fs::absolute(dir).parent_path();
  if (!fs::is_directory(parent)) {
    throw ConfigError("output directory " + dir.string() + " has no existing parent directory");
  }
  fs::create_directory(dir);
}

train::PreparedData load_data(const RunConfig& rc) {
  if (!rc.data_dir) throw ConfigError("--data DIR is required");
  if (!fs::is_directory(*rc.data_dir)) {
    throw DataError("dataset directory " + rc.data_dir->string() + " does not exist");
  }
  return train::load_dataset(data::DatasetPaths::in_directory(*rc.data_dir),
                             static_cast<std::uint32_t>(rc.model.d_origin));
}

fs::path checkpoint_path(const RunConfig& rc) {
  return rc.checkpoint ? *rc.checkpoint : rc.out / "model.dsnp";
}

std::string src_text(const std::optional<double>& s) {
  return s ? std::to_string(*s) : std::string("undefined");
}

int run_gen_data(const RunConfig& rc, std::ostream& out) {
  data::SyntheticSpec spec;
  spec.n_posts = rc.posts;
  spec.n_users = rc.users;
  spec.dim = static_cast<std::uint32_t>(rc.model.d_origin);
  spec.noise_sigma = rc.noise_sigma;
  spec.seed = rc.seed;
  spec.validate();
  ensure_output_dir(rc.out);
  const auto ds = data::generate_synthetic(spec);
  data::write_dataset(data::DatasetPaths::in_directory(rc.out), ds);
  out << "wrote " << ds.posts.size() << " posts (" << spec.n_users << " users, dim " << spec.dim
      << ") to " << rc.out.string() << "\n";
  return kExitOk;
}

int run_train(RunConfig rc, std::ostream& out) {
  rc.train.seed = rc.seed;
  rc.train.validate();
  rc.model.validate();
  ensure_output_dir(rc.out);
  const auto data = load_data(rc);
  train::bind_data_sizes(rc.model, data);
  model::DsnModel model(rc.model, rc.seed);
  spdlog::info("training {} parameters on {} posts", model.params().scalar_count(),
               data.split.train.size());
  const auto result = train::train_model(model, data, rc.train);

  std::ofstream log(rc.out / "train_log.tsv", std::ios::trunc);
  log.precision(10);
  log << "epoch\ttrain_loss\tval_loss\tval_mae\tval_src\n";
  for (const auto& e : result.epochs) {
    log << e.epoch << '\t' << e.train_loss << '\t' << e.val_loss << '\t' << e.val_mae << '\t'
        << (e.val_src ? std::to_string(*e.val_src) : "nan") << '\n';
  }
  const auto ckpt = checkpoint_path(rc);
  model::save_checkpoint(ckpt, rc.model, model.params());

  const auto test = train::evaluate_model(model, data.corpus, data.split.test, rc.train.batch_size);
  const auto baseline = train::evaluate_mean_predictor(data, data.split.test);
  out << "best epoch " << result.best_epoch << " (val MAE " << result.best_val_mae << ")\n"
      << "test MAE " << test.mae << "  SRC " << src_text(test.src) << "\n"
      << "mean-predictor test MAE " << baseline.mae << "\n"
      << "checkpoint " << ckpt.string() << "\n";
  return kExitOk;
}

int run_eval(RunConfig rc, std::ostream& out) {
  rc.model.validate();
  ensure_output_dir(rc.out);
  const auto ckpt = checkpoint_path(rc);
  if (!fs::is_regular_file(ckpt)) throw DataError("checkpoint " + ckpt.string() + " not found");
  const auto data = load_data(rc);
  train::bind_data_sizes(rc.model, data);
  model::DsnModel model(rc.model, rc.seed);
  model::load_checkpoint(ckpt, rc.model, model.params());

  const auto test = train::evaluate_model(model, data.corpus, data.split.test, rc.train.batch_size);
  const auto baseline = train::evaluate_mean_predictor(data, data.split.test);
  train::write_predictions(rc.out / "predictions.tsv", data.corpus, test);

  std::vector<double> err_model, err_base;
  for (std::size_t i = 0; i < test.labels.size(); ++i) {
    err_model.push_back(std::abs(test.predictions[i] - test.labels[i]));
    err_base.push_back(std::abs(baseline.predictions[i] - baseline.labels[i]));
  }
  const auto tt = train::paired_t_test(err_model, err_base);
  out << "test MAE " << test.mae << "  SRC " << src_text(test.src) << "\n"
      << "mean-predictor test MAE " << baseline.mae << " (SRC undefined for a constant predictor)\n"
      << "paired t-test on absolute errors: t = " << tt.t << ", p = " << tt.p << " (dof "
      << tt.dof << ")\n"
      << "predictions " << (rc.out / "predictions.tsv").string() << "\n";
  return kExitOk;
}

int run_ablate(RunConfig rc, std::ostream& out) {
  rc.train.validate();
  rc.model.validate();
  if (rc.seeds == 0) throw ConfigError("seeds must be at least 1");
  const auto points = train::make_grid(rc.axes, rc.model);
  ensure_output_dir(rc.out);
  const auto data = load_data(rc);
  std::vector<std::uint64_t> seeds;
  for (std::size_t i = 0; i < rc.seeds; ++i) seeds.push_back(rc.seed + i);
  const auto report = train::ablate(points, seeds, data, rc.train, rc.jobs);
  const auto path = rc.out / "ablation.tsv";
  report.write_tsv(path);
  std::size_t failed = 0;
  for (const auto& r : report.rows) failed += r.status != "ok";
  out << report.rows.size() << " rows (" << failed << " failed) written to " << path.string()
      << "\n";
  return kExitOk;
}

int run_grad_check(const RunConfig& rc, std::ostream& out) {
  const auto results = model::run_gradient_suite(rc.seed);
  bool ok = true;
  out << "layer              tensors  coords  max_rel_error  worst_tensor                 "
         "analytic        numeric   status\n";
  for (const auto& r : results) {
    char line[256];
    std::snprintf(line, sizeof line, "%-18s %7zu %7zu  %13.3e  %-27s %13.6e %13.6e  %s\n",
                  r.layer.c_str(), r.tensors, r.coordinates, r.max_rel_error,
                  r.worst_tensor.c_str(), r.worst_analytic, r.worst_numeric,
                  r.passed ? "pass" : "FAIL");
    out << line;
    ok = ok && r.passed;
  }
  if (!ok) throw NumericError("gradient check failed (tolerance 1e-4)");
  return kExitOk;
}

}  // namespace

int dispatch(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Dependency-aware sequence network for popularity prediction", "dsn"};
  app.require_subcommand(1, 1);
  std::string config_file;
  Overrides overrides;
  const std::pair<const char*, const char*> commands[] = {
      {"gen-data", "write a synthetic dataset to --out"},
      {"train", "train on --data, write checkpoint and log to --out"},
      {"eval", "evaluate a checkpoint on the test split of --data"},
      {"ablate", "train and test every grid point of --axes"},
      {"grad-check", "finite-difference check of every layer"},
  };
  for (const auto& [name, help] : commands) {
    auto* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_file, "flat key = value settings file");
    for (const auto& flag : kFlags) {
      const std::string key = flag.key;
      sub->add_option_function<std::string>(
          flag.name, [&overrides, key](const std::string& v) { overrides.emplace_back(key, v); },
          flag.help);
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    err << app.help();
    return kExitUsage;
  }

  RunConfig rc;
  try {
    configure_logging(std::getenv("DSN_LOG"));
    if (!config_file.empty()) rc.load_file(config_file);
    for (const auto& [key, value] : overrides) rc.set(key, value);
  } catch (const ConfigError& e) {
    err << "dsn: " << e.what() << "\n";
    return kExitUsage;
  }

  const std::string command = app.get_subcommands().front()->get_name();
  try {
    if (command == "gen-data") return run_gen_data(rc, out);
    if (command == "train") return run_train(rc, out);
    if (command == "eval") return run_eval(rc, out);
    if (command == "ablate") return run_ablate(rc, out);
    return run_grad_check(rc, out);
  } catch (const ConfigError& e) {
    err << "dsn " << command << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "dsn " << command << ": numeric failure: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const std::exception& e) {
    err << "dsn " << command << ": " << e.what() << "\n";
    return kExitData;
  }
}

}  // namespace dsn::cli
