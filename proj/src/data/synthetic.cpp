#include "dsn/data/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <random>
#include <string>

#include "dsn/errors.hpp"

namespace dsn::data {
namespace {

constexpr std::int64_t kStreamStart = 1420070400;  // 2015-01-01T00:00:00Z
constexpr double kStreamSpanDays = 365.0;
constexpr double kCrawlLagDays = 30.0;

struct UserProfile {
  std::string uid;
  double ispro = 0.0;
  double home_lat = 0.0;
  double home_lon = 0.0;
  // followers, following, views, tags, faves, ingroups
  std::array<double, 6> counts{};
  double effect = 0.0;
};

// Parent assignment where every parent receives at least one child.
std::vector<std::int32_t> assign_parents(std::size_t children, std::size_t parents,
                                         std::mt19937_64& rng) {
  std::vector<std::int32_t> out(children);
  std::uniform_int_distribution<std::size_t> pick(0, parents - 1);
  for (std::size_t i = 0; i < children; ++i) {
    out[i] = static_cast<std::int32_t>(i < parents ? i : pick(rng));
  }
  std::shuffle(out.begin(), out.end(), rng);
  // Shuffling keeps the multiset, so coverage of every parent survives.
  return out;
}

std::vector<double> zipf_weights(std::size_t n, double exponent, std::mt19937_64& rng) {
  std::vector<double> w(n);
  for (std::size_t i = 0; i < n; ++i) w[i] = 1.0 / std::pow(static_cast<double>(i + 1), exponent);
  std::shuffle(w.begin(), w.end(), rng);
  return w;
}

std::string padded_id(const char* prefix, std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%s%07zu", prefix, i);
  return buf;
}

}  // namespace

void SyntheticSpec::validate() const {
  if (n_users == 0 || n_posts == 0 || dim == 0) {
    throw ConfigError("synthetic spec needs positive user, post and dimension counts");
  }
  for (auto c : cardinalities) {
    if (c == 0) throw ConfigError("synthetic spec has an empty category level");
  }
  if (cardinalities[1] < cardinalities[0] || cardinalities[2] < cardinalities[1]) {
    throw ConfigError("category levels must not shrink from coarse to fine");
  }
  if (noise_sigma < 0.0) throw ConfigError("noise sigma must be non-negative");
  if (history_weight < 0.0 || history_weight >= 1.0) {
    throw ConfigError("history weight must lie in [0, 1)");
  }
}

SyntheticDataset generate_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  std::normal_distribution<double> std_normal(0.0, 1.0);
  const std::size_t dim = spec.dim;

  SyntheticDataset out;
  out.tree.cardinalities = spec.cardinalities;
  out.tree.parent_of_level2 = assign_parents(spec.cardinalities[1], spec.cardinalities[0], rng);
  out.tree.parent_of_level3 = assign_parents(spec.cardinalities[2], spec.cardinalities[1], rng);
  out.tree.validate();

  // Category effects inherited down the tree with shrinking perturbations.
  std::vector<double> top_effect(spec.cardinalities[0]);
  for (auto& e : top_effect) e = std_normal(rng);
  std::vector<double> mid_effect(spec.cardinalities[1]);
  for (std::size_t j = 0; j < mid_effect.size(); ++j) {
    mid_effect[j] = top_effect[static_cast<std::size_t>(out.tree.parent_of_level2[j])] +
                    0.5 * std_normal(rng);
  }
  std::vector<double> leaf_effect(spec.cardinalities[2]);
  for (std::size_t m = 0; m < leaf_effect.size(); ++m) {
    leaf_effect[m] = mid_effect[static_cast<std::size_t>(out.tree.parent_of_level3[m])] +
                     0.4 * std_normal(rng);
  }

  // Embedding cluster centres follow the hierarchy as well.
  auto random_vectors = [&](std::size_t n, double sd) {
    std::vector<double> v(n * dim);
    for (auto& x : v) x = sd * std_normal(rng);
    return v;
  };
  const auto img_top = random_vectors(spec.cardinalities[0], 0.6);
  const auto img_mid = random_vectors(spec.cardinalities[1], 0.6);
  const auto img_leaf = random_vectors(spec.cardinalities[2], 0.6);
  const auto txt_top = random_vectors(spec.cardinalities[0], 0.6);
  const auto txt_mid = random_vectors(spec.cardinalities[1], 0.6);
  const auto txt_leaf = random_vectors(spec.cardinalities[2], 0.6);
  std::vector<double> direction(dim);
  for (auto& x : direction) x = std_normal(rng);
  const double norm = std::sqrt(std::inner_product(direction.begin(), direction.end(),
                                                   direction.begin(), 0.0));
  for (auto& x : direction) x /= norm;

  // Users: heavy-tailed activity, static profile counts.
  std::vector<UserProfile> users(spec.n_users);
  std::uniform_real_distribution<double> lat(-60.0, 60.0), lon(-180.0, 180.0);
  std::bernoulli_distribution pro(0.3);
  const std::array<double, 6> log_means = {6.0, 5.0, 9.0, 4.0, 5.0, 3.0};
  for (std::size_t u = 0; u < users.size(); ++u) {
    auto& p = users[u];
    p.uid = padded_id("u", u);
    p.ispro = pro(rng) ? 1.0 : 0.0;
    p.home_lat = lat(rng);
    p.home_lon = lon(rng);
    for (std::size_t c = 0; c < p.counts.size(); ++c) {
      p.counts[c] = std::round(std::exp(log_means[c] + 0.6 * std_normal(rng)));
    }
  }
  // Planted user effect: linear in the raw profile fields, standardized over
  // the user population.
  {
    const std::array<double, 7> weights = {0.25, 0.35, 0.0, 0.3, 0.0, 0.2, 0.1};
    std::array<double, 7> mu{}, sd{};
    auto field = [](const UserProfile& p, std::size_t f) { return f == 0 ? p.ispro : p.counts[f - 1]; };
    for (std::size_t f = 0; f < 7; ++f) {
      for (const auto& p : users) mu[f] += field(p, f);
      mu[f] /= static_cast<double>(users.size());
      for (const auto& p : users) sd[f] += (field(p, f) - mu[f]) * (field(p, f) - mu[f]);
      sd[f] = std::sqrt(sd[f] / static_cast<double>(users.size()));
      if (sd[f] <= 0.0) sd[f] = 1.0;
    }
    for (auto& p : users) {
      for (std::size_t f = 0; f < 7; ++f) p.effect += weights[f] * (field(p, f) - mu[f]) / sd[f];
    }
  }

  const auto user_w = zipf_weights(spec.n_users, 1.0, rng);
  const auto leaf_w = zipf_weights(spec.cardinalities[2], 0.8, rng);
  std::discrete_distribution<std::size_t> pick_user(user_w.begin(), user_w.end());
  std::discrete_distribution<std::size_t> pick_leaf(leaf_w.begin(), leaf_w.end());
  std::exponential_distribution<double> gap(static_cast<double>(spec.n_posts) /
                                            (kStreamSpanDays * 86400.0));
  std::bernoulli_distribution is_public(0.9), geo_missing(0.02);
  std::uniform_int_distribution<int> geo_acc(1, 16);

  const std::size_t n = spec.n_posts;
  out.posts.resize(n);
  out.planted.resize(n);
  out.image = {n, spec.dim, std::vector<float>(n * dim)};
  out.text = {n, spec.dim, std::vector<float>(n * dim)};

  const double stationary_mean = spec.base / (1.0 - spec.history_weight);
  double clock = static_cast<double>(kStreamStart);
  std::vector<double> latent(dim);
  for (std::size_t i = 0; i < n; ++i) {
    auto& post = out.posts[i];
    clock += gap(rng);
    const auto& user = users[pick_user(rng)];
    const auto leaf = static_cast<std::int32_t>(pick_leaf(rng));
    const auto path = out.tree.path_of_leaf(leaf);
    const auto top = static_cast<std::size_t>(path[0]);
    const auto mid = static_cast<std::size_t>(path[1]);
    const auto lf = static_cast<std::size_t>(leaf);

    post.post_id = padded_id("p", i);
    post.uid = user.uid;
    post.postdate = static_cast<std::int64_t>(clock);
    post.category = path;
    post.img_row = static_cast<std::int64_t>(i);
    post.txt_row = static_cast<std::int64_t>(i);

    post.numeric[0] = is_public(rng) ? 1.0 : 0.0;
    post.numeric[1] = user.ispro;
    if (geo_missing(rng)) {
      post.numeric[2] = std::nullopt;
      post.numeric[3] = std::nullopt;
    } else {
      post.numeric[2] = user.home_lat + 2.0 * std_normal(rng);
      post.numeric[3] = user.home_lon + 2.0 * std_normal(rng);
    }
    post.numeric[4] = static_cast<double>(geo_acc(rng));
    for (std::size_t c = 0; c < user.counts.size(); ++c) post.numeric[5 + c] = user.counts[c];

    // Image and text share a per-post latent, so the two modalities correlate
    // within a post beyond their common category centre.
    for (auto& z : latent) z = 0.7 * std_normal(rng);
    double image_projection = 0.0;
    for (std::size_t c = 0; c < dim; ++c) {
      const double img = img_top[top * dim + c] + img_mid[mid * dim + c] + img_leaf[lf * dim + c] +
                         latent[c] + 0.3 * std_normal(rng);
      const double txt = txt_top[top * dim + c] + txt_mid[mid * dim + c] + txt_leaf[lf * dim + c] +
                         latent[(c + 1) % dim] + 0.5 * std_normal(rng);
      out.image.values[i * dim + c] = static_cast<float>(img);
      out.text.values[i * dim + c] = static_cast<float>(txt);
      image_projection += direction[c] * static_cast<double>(out.image.values[i * dim + c]);
    }

    double history = stationary_mean;
    if (i > 0) {
      const std::size_t span = std::min(spec.history_span, i);
      history = 0.0;
      for (std::size_t k = i - span; k < i; ++k) history += out.planted[k];
      history /= static_cast<double>(span);
    }
    double s = spec.base + user.effect + leaf_effect[lf] + spec.history_weight * history +
               spec.image_weight * image_projection + spec.noise_sigma * std_normal(rng);
    s = std::max(s, 0.0);
    out.planted[i] = s;
  }

  const double crawl = clock + kCrawlLagDays * 86400.0;
  for (std::size_t i = 0; i < n; ++i) {
    auto& post = out.posts[i];
    post.days = (crawl - static_cast<double>(post.postdate)) / 86400.0;
    const double expected = post.days * std::exp2(out.planted[i] - 1.0);
    post.views = static_cast<std::uint64_t>(std::max<long long>(1, std::llround(expected)));
  }
  return out;
}

DatasetPaths DatasetPaths::in_directory(const std::filesystem::path& dir) {
  return {dir / "posts.jsonl", dir / "image.dsne", dir / "text.dsne", dir / "tree.json"};
}

void write_dataset(const DatasetPaths& paths, const SyntheticDataset& data) {
  write_posts(paths.posts, data.posts);
  write_embedding_file(paths.image, data.image);
  write_embedding_file(paths.text, data.text);
  write_tree(paths.tree, data.tree);
}

}  // namespace dsn::data
