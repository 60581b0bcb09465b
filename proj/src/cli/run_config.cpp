#include "dsn/cli/run_config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "dsn/errors.hpp"

namespace dsn::cli {
namespace {

std::string_view trim(std::string_view s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string_view::npos) return {};
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

std::vector<std::string> split_list(std::string_view text) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const auto item = trim(text.substr(start, comma == std::string_view::npos ? text.npos
                                                                               : comma - start));
    if (!item.empty()) out.emplace_back(item);
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

std::uint64_t parse_uint(std::string_view key, std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  const auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc{} || ptr != end || text.empty()) {
    throw ConfigError("setting '" + std::string(key) + "' expects a non-negative integer, got '" +
                      std::string(text) + "'");
  }
  return v;
}

double parse_double(std::string_view key, std::string_view text) {
  const std::string s(text);
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(s, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != s.size()) {
    throw ConfigError("setting '" + std::string(key) + "' expects a number, got '" + s + "'");
  }
  return v;
}

}  // namespace

model::FeatureSwitches parse_features(std::string_view text) {
  model::FeatureSwitches f{false, false, false};
  for (const auto& item : split_list(text)) {
    if (item == "img") f.image = true;
    else if (item == "txt") f.text = true;
    else if (item == "cat") f.category = true;
    else if (item != "none") {
      throw ConfigError("unknown feature '" + item + "' (expected img, txt, cat or none)");
    }
  }
  return f;
}

model::TemporalSwitches parse_temporal(std::string_view text) {
  model::TemporalSwitches t{false, false};
  for (const auto& item : split_list(text)) {
    if (item == "lstm") t.local_lstm = true;
    else if (item == "attn") t.long_attention = true;
    else if (item != "none") {
      throw ConfigError("unknown temporal component '" + item + "' (expected lstm, attn or none)");
    }
  }
  return t;
}

model::ModelConfig RunConfig::default_model() {
  model::ModelConfig m;
  m.d_origin = 64;
  return m;
}

const std::vector<std::string>& RunConfig::keys() {
  static const std::vector<std::string> k = {
      "d_origin", "d_hidden", "heads", "l", "alpha", "beta", "dropout", "uid_embed_dim",
      "features", "temporal", "category", "lr", "weight_decay", "epochs", "batch_size",
      "patience", "seed", "jobs", "posts", "users", "noise_sigma", "axes", "seeds", "data",
      "checkpoint", "out"};
  return k;
}

void RunConfig::set(std::string_view key, std::string_view raw) {
  const auto value = trim(raw);
  const auto u = [&] { return parse_uint(key, value); };
  const auto f = [&] { return parse_double(key, value); };
  if (key == "d_origin") model.d_origin = u();
  else if (key == "d_hidden") model.d_hidden = u();
  else if (key == "heads") model.heads = u();
  else if (key == "l") model.window_len = u();
  else if (key == "alpha") model.alpha = f();
  else if (key == "beta") model.beta = f();
  else if (key == "dropout") model.dropout = f();
  else if (key == "uid_embed_dim") model.uid_embed_dim = u();
  else if (key == "features") model.features = parse_features(value);
  else if (key == "temporal") model.temporal = parse_temporal(value);
  else if (key == "category") model.category_encoder = model::category_encoder_from_string(value);
  else if (key == "lr") train.lr = f();
  else if (key == "weight_decay") train.weight_decay = f();
  else if (key == "epochs") train.epochs = u();
  else if (key == "batch_size") train.batch_size = u();
  else if (key == "patience") train.patience = u();
  else if (key == "seed") seed = u();
  else if (key == "jobs") jobs = u();
  else if (key == "posts") posts = u();
  else if (key == "users") users = u();
  else if (key == "noise_sigma") noise_sigma = f();
  else if (key == "axes") axes = split_list(value);
  else if (key == "seeds") seeds = u();
  else if (key == "data") data_dir = std::filesystem::path(std::string(value));
  else if (key == "checkpoint") checkpoint = std::filesystem::path(std::string(value));
  else if (key == "out") out = std::filesystem::path(std::string(value));
  else throw ConfigError("unknown setting '" + std::string(key) + "'");
}

void RunConfig::load_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  std::string line;
  for (std::size_t number = 1; std::getline(in, line); ++number) {
    std::string_view view(line);
    view = trim(view.substr(0, view.find('#')));
    if (view.empty()) continue;
    const auto eq = view.find('=');
    if (eq == std::string_view::npos) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": expected key = value");
    }
    const auto key = trim(view.substr(0, eq));
    try {
      set(key, view.substr(eq + 1));
    } catch (const ConfigError& e) {
      throw ConfigError(path.string() + ":" + std::to_string(number) + ": " + e.what());
    }
  }
}

}  // namespace dsn::cli
