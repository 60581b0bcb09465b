#include "dsn/model/gradient_suite.hpp"

#include <cmath>
#include <functional>
#include <random>
#include <utility>

#include "dsn/autodiff/grad_check.hpp"
#include "dsn/autodiff/ops.hpp"
#include "dsn/data/stats.hpp"
#include "dsn/data/synthetic.hpp"
#include "dsn/model/batch_builder.hpp"
#include "dsn/model/dsn_model.hpp"
#include "dsn/model/layers.hpp"

namespace dsn::model {
namespace {

using ad::Tensor;
using Named = std::vector<std::pair<std::string, Tensor>>;

struct Instance {
  std::mt19937_64 rng;

  Tensor normal(ad::Shape shape, bool track = true) {
    std::normal_distribution<double> n(0.0, 1.0);
    std::vector<double> v(ad::shape_numel(shape));
    for (auto& x : v) x = n(rng);
    return Tensor(std::move(shape), std::move(v), track);
  }

  // sum(out * R) with R drawn once per layer.
  std::function<Tensor()> project(std::function<Tensor()> f) {
    const auto probe = f();
    const auto r = normal(probe.shape(), false);
    return [f = std::move(f), r] { return ad::sum(ad::mul(f(), r)); };
  }
};

LayerGradResult check(const std::string& layer, const std::function<Tensor()>& f,
                      const Named& tensors, double eps, double tol) {
  LayerGradResult out;
  out.layer = layer;
  out.passed = true;
  for (const auto& item : ad::grad_check_all(f, tensors, eps, tol)) {
    ++out.tensors;
    out.coordinates += item.report.rel_errors.size();
    if (item.report.max_rel_error >= out.max_rel_error) {
      out.max_rel_error = item.report.max_rel_error;
      out.worst_tensor = item.name;
      out.worst_analytic = item.report.analytic[item.report.worst_index];
      out.worst_numeric = item.report.numeric[item.report.worst_index];
    }
    out.passed = out.passed && item.report.passed;
  }
  return out;
}

void append(Named& dst, const std::string& prefix, const GateParams& g) {
  dst.emplace_back(prefix + ".w_value", g.w_value);
  dst.emplace_back(prefix + ".b_value", g.b_value);
  dst.emplace_back(prefix + ".w_gate", g.w_gate);
  dst.emplace_back(prefix + ".b_gate", g.b_gate);
  if (g.w_aux.defined()) dst.emplace_back(prefix + ".w_aux", g.w_aux);
}

// Variance-preserving values: weights ~ N(0, 1/fan_in), vectors (biases,
// layer-norm gains) around their init with unit-scale noise. The default
// uniform init shrinks activations by about 1/3 per projection, and after a
// few stacked projections some gradient coordinates fall below what central
// differences resolve in double precision.
void randomize(Named& tensors, Instance& inst) {
  for (auto& [_, t] : tensors) {
    const auto& shape = t.shape();
    std::size_t fan_in = 1;
    if (shape.size() == 2) fan_in = shape[0];
    if (shape.size() == 3) fan_in = shape[0] * shape[1];
    const double sd = 1.0 / std::sqrt(static_cast<double>(fan_in));
    const auto fresh = inst.normal(shape, false);
    auto dst = t.mutable_values();
    for (std::size_t i = 0; i < dst.size(); ++i) {
      dst[i] = shape.size() == 1 ? dst[i] + 0.5 * fresh[i] : sd * fresh[i];
    }
  }
}

Named with_prefix(const Named& all, const std::string& prefix) {
  Named out;
  for (const auto& item : all) {
    if (item.first.rfind(prefix, 0) == 0) out.push_back(item);
  }
  return out;
}

}  // namespace

std::vector<LayerGradResult> run_gradient_suite(std::uint64_t seed, double eps, double tol) {
  Instance inst{std::mt19937_64(seed)};
  std::vector<LayerGradResult> results;

  ModelConfig cfg;
  cfg.d_origin = 5;
  cfg.d_hidden = 4;
  cfg.heads = 2;
  cfg.window_len = 3;
  cfg.level_cardinalities = {2, 3, 4};
  cfg.uid_embed_dim = 2;
  cfg.uid_vocab_size = 4;
  const std::size_t d = cfg.d_hidden, l = cfg.window_len, batch = 2;
  const std::size_t rows = batch * l;
  Named all;
  {
    auto p = DsnParams::create(cfg, seed);
    all = p.named;
    randomize(all, inst);

    // Gate (two-input form).
    {
      auto x = inst.normal({rows, d});
      auto y = inst.normal({rows, d});
      const auto& g = p.category->gates[0];
      Named t{{"x", x}, {"y", y}};
      append(t, "gate", g);
      results.push_back(check("glu_gate", inst.project([&] { return glu_gate(x, y, g); }), t, eps, tol));
    }
    // Adapter.
    {
      auto f = inst.normal({rows, cfg.d_origin});
      Named t{{"f_origin", f}};
      for (auto& item : with_prefix(all, "visual_adapter")) t.push_back(item);
      results.push_back(check("vl_adapt",
                              inst.project([&] { return vl_adapt(f, 0.4, *p.visual, l); }), t,
                              eps, tol));
    }
    // HCE.
    {
      const std::vector<std::int32_t> ids = {0, 1, 3, 1, 2, 0, 0, 0, 2, 1, 1, 1, 0, 2, 3, 1, 0, 1};
      const auto card = cfg.level_cardinalities;
      results.push_back(check(
          "hce_forward",
          inst.project([&] { return hce_forward(ids, card, *p.category); }),
          with_prefix(all, "category"), eps, tol));
    }
    // GRN.
    {
      auto x = inst.normal({rows, d});
      Named t{{"x", x}};
      for (auto& item : with_prefix(all, "temporal.grn")) t.push_back(item);
      results.push_back(
          check("grn", inst.project([&] { return grn(x, p.temporal->grn); }), t, eps, tol));
    }
    // Local temporal stage; the first window is partly padding.
    {
      auto f = inst.normal({rows, 3 * d});
      const std::vector<std::uint8_t> mask = {0, 1, 1, 1, 1, 1};
      Named t{{"f", f}};
      for (auto& item : with_prefix(all, "temporal")) t.push_back(item);
      results.push_back(check(
          "local_temporal",
          inst.project([&] { return local_temporal(f, mask, *p.temporal, true, batch, l); }), t,
          eps, tol));
    }
    // Target attention; the first window has a single real neighbor.
    {
      auto phi = inst.normal({rows, d});
      const std::vector<std::uint8_t> mask = {0, 1, 1, 1, 1, 1};
      Named t{{"phi", phi}};
      for (auto& item : with_prefix(all, "attention")) t.push_back(item);
      results.push_back(check(
          "target_attention",
          inst.project([&] { return target_attention(phi, mask, *p.attention, cfg.heads, batch, l).h; }),
          t, eps, tol));
    }
    // FFN.
    {
      auto h = inst.normal({batch, d});
      auto phi_t = inst.normal({batch, d});
      Named t{{"h", h}, {"phi_target", phi_t}};
      for (auto& item : with_prefix(all, "ffn")) t.push_back(item);
      results.push_back(
          check("fuse_ffn", inst.project([&] { return fuse_ffn(h, phi_t, p.ffn); }), t, eps, tol));
    }
  }

  // Full model on a two-window batch drawn from a tiny synthetic stream.
  {
    data::SyntheticSpec spec;
    spec.n_users = 3;
    spec.n_posts = 6;
    spec.dim = static_cast<std::uint32_t>(cfg.d_origin);
    spec.cardinalities = {2, 3, 4};
    spec.seed = seed;
    auto ds = data::generate_synthetic(spec);
    const auto stats = data::fit_stats(ds.posts);
    auto corpus = Corpus::assemble(ds.posts, ds.image, ds.text, stats);
    cfg.uid_vocab_size = stats.uid_vocab_size();
    DsnModel model(cfg, seed);
    auto named = model.params().named;
    randomize(named, inst);
    const std::vector<std::size_t> targets = {1, 5};
    const auto batch_data = build_batch(corpus, targets, l, cfg.features);
    results.push_back(check(
        "full_model",
        inst.project([&] { return model.forward(batch_data, Mode::kEval).predictions; }), named,
        eps, tol));
  }
  return results;
}

}  // namespace dsn::model
