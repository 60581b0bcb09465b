#include "dsn/train/adam.hpp"

#include <cmath>

#include "dsn/errors.hpp"

namespace dsn::train {

Adam::Adam(std::vector<std::pair<std::string, ad::Tensor>> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  if (!(config_.lr >= 0.0) || !(config_.weight_decay >= 0.0)) {
    throw ConfigError("learning rate and weight decay must be non-negative");
  }
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (const auto& [_, t] : params_) {
    m_.emplace_back(t.numel(), 0.0);
    v_.emplace_back(t.numel(), 0.0);
  }
}

void Adam::step() {
  for (const auto& [name, t] : params_) {
    for (double g : t.grad()) {
      if (!std::isfinite(g)) throw NumericError("non-finite gradient in parameter " + name);
    }
  }
  ++t_;
  const double c1 = 1.0 - std::pow(config_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(config_.beta2, static_cast<double>(t_));
  for (std::size_t p = 0; p < params_.size(); ++p) {
    auto& tensor = params_[p].second;
    const auto grad = tensor.grad();
    auto theta = tensor.mutable_values();
    auto& m = m_[p];
    auto& v = v_[p];
    for (std::size_t i = 0; i < theta.size(); ++i) {
      const double g = grad.empty() ? 0.0 : grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double update = (m[i] / c1) / (std::sqrt(v[i] / c2) + config_.eps);
      theta[i] -= config_.lr * (update + config_.weight_decay * theta[i]);
    }
  }
}

}  // namespace dsn::train
