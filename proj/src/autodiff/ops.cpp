#include "dsn/autodiff/ops.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "dsn/errors.hpp"

namespace dsn::ad {
namespace {

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;

ConstMap as_matrix(std::span<const double> data, std::size_t rows, std::size_t cols) {
  return ConstMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

MutMap as_matrix(std::span<double> data, std::size_t rows, std::size_t cols) {
  return MutMap(data.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " + shape_to_string(a.shape()) +
                         " vs " + shape_to_string(b.shape()));
  }
}

void require_rank2(const Tensor& a, const char* op) {
  if (a.rank() != 2) {
    throw DimensionError(std::string(op) + ": expected a matrix, got " +
                         shape_to_string(a.shape()));
  }
}

// Accumulates `g` (optionally scaled) into the gradient of `dst` if tracked.
void accumulate(const std::shared_ptr<TensorImpl>& dst, std::span<const double> g,
                double factor = 1.0) {
  if (!dst->requires_grad) return;
  auto buf = dst->grad_buffer();
  for (std::size_t i = 0; i < g.size(); ++i) buf[i] += factor * g[i];
}

double sigmoid_scalar(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0)) {
    throw DimensionError("matmul: incompatible shapes " + shape_to_string(a.shape()) + " and " +
                         shape_to_string(b.shape()));
  }
  const auto m = a.dim(0), k = a.dim(1), n = b.dim(1);
  std::vector<double> out(m * n);
  as_matrix(std::span<double>(out), m, n).noalias() =
      as_matrix(a.values(), m, k) * as_matrix(b.values(), k, n);
  auto ai = a.impl(), bi = b.impl();
  return make_result({m, n}, std::move(out), {a, b}, [ai, bi, m, k, n](std::span<const double> g) {
    const auto dc = as_matrix(g, m, n);
    if (ai->requires_grad) {
      as_matrix(ai->grad_buffer(), m, k).noalias() +=
          dc * as_matrix(std::span<const double>(bi->values), k, n).transpose();
    }
    if (bi->requires_grad) {
      as_matrix(bi->grad_buffer(), k, n).noalias() +=
          as_matrix(std::span<const double>(ai->values), m, k).transpose() * dc;
    }
  });
}

Tensor add(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "add");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] + b[i];
  auto ai = a.impl(), bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, [ai, bi](std::span<const double> g) {
    accumulate(ai, g);
    accumulate(bi, g);
  });
}

Tensor sub(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "sub");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] - b[i];
  auto ai = a.impl(), bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, [ai, bi](std::span<const double> g) {
    accumulate(ai, g);
    accumulate(bi, g, -1.0);
  });
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require_same_shape(a, b, "mul");
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * b[i];
  auto ai = a.impl(), bi = b.impl();
  return make_result(a.shape(), std::move(out), {a, b}, [ai, bi](std::span<const double> g) {
    if (ai->requires_grad) {
      auto d = ai->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * bi->values[i];
    }
    if (bi->requires_grad) {
      auto d = bi->grad_buffer();
      for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * ai->values[i];
    }
  });
}

Tensor scale(const Tensor& a, double factor) {
  std::vector<double> out(a.numel());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = a[i] * factor;
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a},
                     [ai, factor](std::span<const double> g) { accumulate(ai, g, factor); });
}

Tensor add_bias(const Tensor& a, const Tensor& bias) {
  const auto n = a.cols();
  if (bias.numel() != n) {
    throw DimensionError("add_bias: bias " + shape_to_string(bias.shape()) +
                         " does not match last dim of " + shape_to_string(a.shape()));
  }
  const auto rows = a.rows();
  std::vector<double> out(a.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = a[r * n + c] + bias[c];
  }
  auto ai = a.impl(), bi = bias.impl();
  return make_result(a.shape(), std::move(out), {a, bias},
                     [ai, bi, rows, n](std::span<const double> g) {
                       accumulate(ai, g);
                       if (bi->requires_grad) {
                         auto d = bi->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < n; ++c) d[c] += g[r * n + c];
                         }
                       }
                     });
}

Tensor mask_rows(const Tensor& a, std::span<const std::uint8_t> mask) {
  const auto rows = a.rows(), n = a.cols();
  if (mask.size() != rows) {
    throw DimensionError("mask_rows: mask of length " + std::to_string(mask.size()) +
                         " for shape " + shape_to_string(a.shape()));
  }
  std::vector<std::uint8_t> keep(mask.begin(), mask.end());
  std::vector<double> out(a.values().begin(), a.values().end());
  for (std::size_t r = 0; r < rows; ++r) {
    if (!keep[r]) std::fill_n(out.begin() + static_cast<std::ptrdiff_t>(r * n), n, 0.0);
  }
  auto ai = a.impl();
  return make_result(a.shape(), std::move(out), {a},
                     [ai, keep = std::move(keep), n](std::span<const double> g) {
                       if (!ai->requires_grad) return;
                       auto d = ai->grad_buffer();
                       for (std::size_t r = 0; r < keep.size(); ++r) {
                         if (!keep[r]) continue;
                         for (std::size_t c = 0; c < n; ++c) d[r * n + c] += g[r * n + c];
                       }
                     });
}

Tensor apply_activation(const Tensor& x, Activation kind) {
  const auto n = x.numel();
  std::vector<double> out(n);
  const auto in = x.values();
  switch (kind) {
    case Activation::kRelu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : 0.0;
      break;
    case Activation::kSigmoid:
      for (std::size_t i = 0; i < n; ++i) out[i] = sigmoid_scalar(in[i]);
      break;
    case Activation::kElu:
      for (std::size_t i = 0; i < n; ++i) out[i] = in[i] > 0.0 ? in[i] : std::expm1(in[i]);
      break;
    case Activation::kTanh:
      for (std::size_t i = 0; i < n; ++i) out[i] = std::tanh(in[i]);
      break;
  }
  auto xi = x.impl();
  auto result = make_result(x.shape(), std::move(out), {x}, nullptr);
  if (!result.requires_grad()) return result;
  // The backward rule needs the output values; capture them by weak
  // reference to avoid an ownership cycle through the node.
  std::weak_ptr<TensorImpl> self = result.impl();
  result.impl()->node->backward = [xi, self, kind](std::span<const double> g) {
    if (!xi->requires_grad) return;
    auto out_impl = self.lock();
    const auto& y = out_impl->values;
    const auto& xv = xi->values;
    auto d = xi->grad_buffer();
    switch (kind) {
      case Activation::kRelu:
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += xv[i] > 0.0 ? g[i] : 0.0;
        break;
      case Activation::kSigmoid:
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * y[i] * (1.0 - y[i]);
        break;
      case Activation::kElu:
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += xv[i] > 0.0 ? g[i] : g[i] * (y[i] + 1.0);
        break;
      case Activation::kTanh:
        for (std::size_t i = 0; i < g.size(); ++i) d[i] += g[i] * (1.0 - y[i] * y[i]);
        break;
    }
  };
  return result;
}

Tensor dropout(const Tensor& x, double p, std::mt19937_64& rng) {
  if (p <= 0.0) return x;
  if (p >= 1.0) throw ConfigError("dropout probability must be < 1");
  const double keep_scale = 1.0 / (1.0 - p);
  std::bernoulli_distribution drop(p);
  std::vector<double> factors(x.numel());
  for (auto& f : factors) f = drop(rng) ? 0.0 : keep_scale;
  return mul(x, Tensor(x.shape(), std::move(factors)));
}

Tensor sum(const Tensor& x) {
  const auto v = x.values();
  const double total = std::accumulate(v.begin(), v.end(), 0.0);
  auto xi = x.impl();
  return make_result({}, {total}, {x}, [xi](std::span<const double> g) {
    if (!xi->requires_grad) return;
    auto d = xi->grad_buffer();
    for (auto& e : d) e += g[0];
  });
}

Tensor mean(const Tensor& x) {
  if (x.numel() == 0) throw DimensionError("mean of an empty tensor");
  return scale(sum(x), 1.0 / static_cast<double>(x.numel()));
}

Tensor softmax_lastdim(const Tensor& x, std::span<const std::uint8_t> mask) {
  const auto rows = x.rows(), n = x.cols();
  if (!mask.empty() && mask.size() != x.numel()) {
    throw DimensionError("softmax_lastdim: mask of " + std::to_string(mask.size()) +
                         " entries for shape " + shape_to_string(x.shape()));
  }
  const auto in = x.values();
  std::vector<double> out(x.numel(), 0.0);
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * n;
    auto live = [&](std::size_t c) { return mask.empty() || mask[base + c] != 0; };
    double max_val = -std::numeric_limits<double>::infinity();
    for (std::size_t c = 0; c < n; ++c) {
      if (live(c)) max_val = std::max(max_val, in[base + c]);
    }
    if (max_val == -std::numeric_limits<double>::infinity()) {
      throw DimensionError("softmax_lastdim: slice " + std::to_string(r) +
                           " has every entry masked");
    }
    double z = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      if (!live(c)) continue;
      out[base + c] = std::exp(in[base + c] - max_val);
      z += out[base + c];
    }
    for (std::size_t c = 0; c < n; ++c) out[base + c] /= z;
  }
  auto xi = x.impl();
  auto result = make_result(x.shape(), std::move(out), {x}, nullptr);
  if (!result.requires_grad()) return result;
  std::weak_ptr<TensorImpl> self = result.impl();
  result.impl()->node->backward = [xi, self, rows, n](std::span<const double> g) {
    if (!xi->requires_grad) return;
    const auto& y = self.lock()->values;
    auto d = xi->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      const std::size_t base = r * n;
      double dot = 0.0;
      for (std::size_t c = 0; c < n; ++c) dot += g[base + c] * y[base + c];
      for (std::size_t c = 0; c < n; ++c) d[base + c] += y[base + c] * (g[base + c] - dot);
    }
  };
  return result;
}

Tensor layer_norm(const Tensor& x, const Tensor& gain, const Tensor& bias, double eps) {
  const auto rows = x.rows(), n = x.cols();
  if (n == 0) throw DimensionError("layer_norm over an empty last dimension");
  if (gain.numel() != n || bias.numel() != n) {
    throw DimensionError("layer_norm: gain/bias " + shape_to_string(gain.shape()) + "/" +
                         shape_to_string(bias.shape()) + " for input " +
                         shape_to_string(x.shape()));
  }
  const auto in = x.values();
  std::vector<double> normalized(x.numel());
  std::vector<double> inv_std(rows);
  std::vector<double> out(x.numel());
  for (std::size_t r = 0; r < rows; ++r) {
    const std::size_t base = r * n;
    double mu = 0.0;
    for (std::size_t c = 0; c < n; ++c) mu += in[base + c];
    mu /= static_cast<double>(n);
    double var = 0.0;
    for (std::size_t c = 0; c < n; ++c) {
      const double dev = in[base + c] - mu;
      var += dev * dev;
    }
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      normalized[base + c] = (in[base + c] - mu) * inv_std[r];
      out[base + c] = normalized[base + c] * gain[c] + bias[c];
    }
  }
  auto xi = x.impl(), gi = gain.impl(), bi = bias.impl();
  return make_result(
      x.shape(), std::move(out), {x, gain, bias},
      [xi, gi, bi, rows, n, normalized = std::move(normalized),
       inv_std = std::move(inv_std)](std::span<const double> g) {
        if (gi->requires_grad) {
          auto d = gi->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < n; ++c) d[c] += g[r * n + c] * normalized[r * n + c];
          }
        }
        if (bi->requires_grad) {
          auto d = bi->grad_buffer();
          for (std::size_t r = 0; r < rows; ++r) {
            for (std::size_t c = 0; c < n; ++c) d[c] += g[r * n + c];
          }
        }
        if (!xi->requires_grad) return;
        auto d = xi->grad_buffer();
        const auto inv_n = 1.0 / static_cast<double>(n);
        for (std::size_t r = 0; r < rows; ++r) {
          const std::size_t base = r * n;
          double mean_dn = 0.0, mean_dn_x = 0.0;
          for (std::size_t c = 0; c < n; ++c) {
            const double dn = g[base + c] * gi->values[c];
            mean_dn += dn;
            mean_dn_x += dn * normalized[base + c];
          }
          mean_dn *= inv_n;
          mean_dn_x *= inv_n;
          for (std::size_t c = 0; c < n; ++c) {
            const double dn = g[base + c] * gi->values[c];
            d[base + c] += inv_std[r] * (dn - mean_dn - normalized[base + c] * mean_dn_x);
          }
        }
      });
}

Tensor concat_cols(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const auto rows = parts.front().rows();
  std::vector<std::size_t> offsets;
  std::size_t total = 0;
  for (const auto& p : parts) {
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: row mismatch " + shape_to_string(parts.front().shape()) +
                           " vs " + shape_to_string(p.shape()));
    }
    offsets.push_back(total);
    total += p.cols();
  }
  std::vector<double> out(rows * total);
  for (std::size_t i = 0; i < parts.size(); ++i) {
    const auto w = parts[i].cols();
    const auto v = parts[i].values();
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * w), w,
                  out.begin() + static_cast<std::ptrdiff_t>(r * total + offsets[i]));
    }
  }
  std::vector<std::shared_ptr<TensorImpl>> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result({rows, total}, std::move(out), std::move(inputs),
                     [impls, offsets, rows, total](std::span<const double> g) {
                       for (std::size_t i = 0; i < impls.size(); ++i) {
                         if (!impls[i]->requires_grad) continue;
                         const auto w = impls[i]->shape.empty() ? 1 : impls[i]->shape.back();
                         auto d = impls[i]->grad_buffer();
                         for (std::size_t r = 0; r < rows; ++r) {
                           for (std::size_t c = 0; c < w; ++c) {
                             d[r * w + c] += g[r * total + offsets[i] + c];
                           }
                         }
                       }
                     });
}

Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const auto cols = parts.front().cols();
  std::vector<double> out;
  std::vector<std::size_t> offsets;
  for (const auto& p : parts) {
    if (p.cols() != cols) {
      throw DimensionError("concat_rows: column mismatch " +
                           shape_to_string(parts.front().shape()) + " vs " +
                           shape_to_string(p.shape()));
    }
    offsets.push_back(out.size());
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  const auto rows = out.size() / std::max<std::size_t>(cols, 1);
  std::vector<std::shared_ptr<TensorImpl>> impls;
  for (const auto& p : parts) impls.push_back(p.impl());
  std::vector<Tensor> inputs(parts.begin(), parts.end());
  return make_result({rows, cols}, std::move(out), std::move(inputs),
                     [impls, offsets](std::span<const double> g) {
                       for (std::size_t i = 0; i < impls.size(); ++i) {
                         accumulate(impls[i], g.subspan(offsets[i], impls[i]->values.size()));
                       }
                     });
}

Tensor slice_cols(const Tensor& x, std::size_t start, std::size_t width) {
  const auto rows = x.rows(), n = x.cols();
  if (start + width > n) {
    throw DimensionError("slice_cols: [" + std::to_string(start) + ", " +
                         std::to_string(start + width) + ") out of range for " +
                         shape_to_string(x.shape()));
  }
  std::vector<double> out(rows * width);
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(r * n + start), width,
                out.begin() + static_cast<std::ptrdiff_t>(r * width));
  }
  auto xi = x.impl();
  return make_result({rows, width}, std::move(out), {x},
                     [xi, rows, n, start, width](std::span<const double> g) {
                       if (!xi->requires_grad) return;
                       auto d = xi->grad_buffer();
                       for (std::size_t r = 0; r < rows; ++r) {
                         for (std::size_t c = 0; c < width; ++c) {
                           d[r * n + start + c] += g[r * width + c];
                         }
                       }
                     });
}

Tensor gather_rows(const Tensor& x, std::span<const std::size_t> indices) {
  const auto rows = x.rows(), n = x.cols();
  std::vector<std::size_t> idx(indices.begin(), indices.end());
  std::vector<double> out(idx.size() * n);
  const auto v = x.values();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] >= rows) {
      throw DimensionError("gather_rows: index " + std::to_string(idx[i]) + " out of range for " +
                           shape_to_string(x.shape()));
    }
    std::copy_n(v.begin() + static_cast<std::ptrdiff_t>(idx[i] * n), n,
                out.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  auto xi = x.impl();
  const auto out_rows = idx.size();
  return make_result({out_rows, n}, std::move(out), {x},
                     [xi, idx = std::move(idx), n](std::span<const double> g) {
                       if (!xi->requires_grad) return;
                       auto d = xi->grad_buffer();
                       for (std::size_t i = 0; i < idx.size(); ++i) {
                         for (std::size_t c = 0; c < n; ++c) d[idx[i] * n + c] += g[i * n + c];
                       }
                     });
}

Tensor transpose(const Tensor& x) {
  require_rank2(x, "transpose");
  const auto m = x.dim(0), n = x.dim(1);
  std::vector<double> out(m * n);
  as_matrix(std::span<double>(out), n, m) = as_matrix(x.values(), m, n).transpose();
  auto xi = x.impl();
  return make_result({n, m}, std::move(out), {x}, [xi, m, n](std::span<const double> g) {
    if (!xi->requires_grad) return;
    as_matrix(xi->grad_buffer(), m, n) += as_matrix(g, n, m).transpose();
  });
}

Tensor swap_last_axes(const Tensor& x) {
  if (x.rank() != 3) {
    throw DimensionError("swap_last_axes: expected rank 3, got " + shape_to_string(x.shape()));
  }
  const auto a = x.dim(0), b = x.dim(1), c = x.dim(2);
  std::vector<double> out(x.numel());
  const auto v = x.values();
  for (std::size_t i = 0; i < a; ++i) {
    for (std::size_t j = 0; j < b; ++j) {
      for (std::size_t k = 0; k < c; ++k) out[(i * c + k) * b + j] = v[(i * b + j) * c + k];
    }
  }
  auto xi = x.impl();
  return make_result({a, c, b}, std::move(out), {x}, [xi, a, b, c](std::span<const double> g) {
    if (!xi->requires_grad) return;
    auto d = xi->grad_buffer();
    for (std::size_t i = 0; i < a; ++i) {
      for (std::size_t j = 0; j < b; ++j) {
        for (std::size_t k = 0; k < c; ++k) d[(i * b + j) * c + k] += g[(i * c + k) * b + j];
      }
    }
  });
}

Tensor sum_col_blocks(const Tensor& x, std::size_t block) {
  const auto rows = x.rows(), n = x.cols();
  if (block == 0 || n % block != 0) {
    throw DimensionError("sum_col_blocks: block " + std::to_string(block) +
                         " does not divide width of " + shape_to_string(x.shape()));
  }
  const auto h = n / block;
  std::vector<double> out(rows * h, 0.0);
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * h + c / block] += v[r * n + c];
  }
  auto xi = x.impl();
  return make_result({rows, h}, std::move(out), {x}, [xi, rows, n, h, block](std::span<const double> g) {
    if (!xi->requires_grad) return;
    auto d = xi->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < n; ++c) d[r * n + c] += g[r * h + c / block];
    }
  });
}

Tensor expand_col_blocks(const Tensor& x, std::size_t block) {
  const auto rows = x.rows(), h = x.cols();
  const auto n = h * block;
  std::vector<double> out(rows * n);
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[r * n + c] = v[r * h + c / block];
  }
  auto xi = x.impl();
  return make_result({rows, n}, std::move(out), {x}, [xi, rows, n, h, block](std::span<const double> g) {
    if (!xi->requires_grad) return;
    auto d = xi->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < n; ++c) d[r * h + c / block] += g[r * n + c];
    }
  });
}

Tensor sum_row_segments(const Tensor& x, std::size_t segment) {
  const auto rows = x.rows(), n = x.cols();
  if (segment == 0 || rows % segment != 0) {
    throw DimensionError("sum_row_segments: segment " + std::to_string(segment) +
                         " does not divide rows of " + shape_to_string(x.shape()));
  }
  const auto groups = rows / segment;
  std::vector<double> out(groups * n, 0.0);
  const auto v = x.values();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < n; ++c) out[(r / segment) * n + c] += v[r * n + c];
  }
  auto xi = x.impl();
  return make_result({groups, n}, std::move(out), {x}, [xi, rows, n, segment](std::span<const double> g) {
    if (!xi->requires_grad) return;
    auto d = xi->grad_buffer();
    for (std::size_t r = 0; r < rows; ++r) {
      for (std::size_t c = 0; c < n; ++c) d[r * n + c] += g[(r / segment) * n + c];
    }
  });
}

Tensor conv1d_same_segments(const Tensor& x, const Tensor& kernel, const Tensor& bias,
                            std::size_t segment_len) {
  require_rank2(x, "conv1d_same");
  if (kernel.rank() != 3) {
    throw DimensionError("conv1d_same: kernel must be [k x c_in x c_out], got " +
                         shape_to_string(kernel.shape()));
  }
  const auto k = kernel.dim(0), c_in = kernel.dim(1), c_out = kernel.dim(2);
  if (k % 2 == 0) {
    throw ConfigError("conv1d_same: kernel size must be odd, got " + std::to_string(k));
  }
  if (x.dim(1) != c_in || bias.numel() != c_out) {
    throw DimensionError("conv1d_same: input " + shape_to_string(x.shape()) + ", kernel " +
                         shape_to_string(kernel.shape()) + ", bias " +
                         shape_to_string(bias.shape()));
  }
  const auto len = x.dim(0);
  if (segment_len == 0 || len % segment_len != 0) {
    throw DimensionError("conv1d_same: segment length " + std::to_string(segment_len) +
                         " does not divide " + std::to_string(len) + " rows");
  }
  const auto half = static_cast<std::ptrdiff_t>(k / 2);
  const auto seg = static_cast<std::ptrdiff_t>(segment_len);

  // Row t of tap j reads row t + (j - half) of the same segment, or zero.
  auto source_row = [segment_len, half, seg](std::size_t t, std::size_t j) -> std::ptrdiff_t {
    const auto pos = static_cast<std::ptrdiff_t>(t % segment_len);
    const auto shifted = pos + static_cast<std::ptrdiff_t>(j) - half;
    if (shifted < 0 || shifted >= seg) return -1;
    return static_cast<std::ptrdiff_t>(t) + static_cast<std::ptrdiff_t>(j) - half;
  };

  std::vector<std::vector<double>> taps(k);
  const auto xv = x.values();
  for (std::size_t j = 0; j < k; ++j) {
    if (static_cast<std::ptrdiff_t>(j) == half) continue;  // the unshifted tap reads x directly
    taps[j].assign(len * c_in, 0.0);
    for (std::size_t t = 0; t < len; ++t) {
      const auto src = source_row(t, j);
      if (src < 0) continue;
      std::copy_n(xv.begin() + src * static_cast<std::ptrdiff_t>(c_in), c_in,
                  taps[j].begin() + static_cast<std::ptrdiff_t>(t * c_in));
    }
  }
  auto tap_input = [&](std::size_t j) -> std::span<const double> {
    return static_cast<std::ptrdiff_t>(j) == half ? xv : std::span<const double>(taps[j]);
  };

  std::vector<double> out(len * c_out);
  auto out_m = as_matrix(std::span<double>(out), len, c_out);
  const auto kv = kernel.values();
  // Centre tap first so that k == 1 is exactly one matrix product.
  out_m.noalias() = as_matrix(tap_input(static_cast<std::size_t>(half)), len, c_in) *
                    as_matrix(kv.subspan(static_cast<std::size_t>(half) * c_in * c_out, c_in * c_out), c_in, c_out);
  for (std::size_t j = 0; j < k; ++j) {
    if (static_cast<std::ptrdiff_t>(j) == half) continue;
    out_m.noalias() += as_matrix(tap_input(j), len, c_in) *
                       as_matrix(kv.subspan(j * c_in * c_out, c_in * c_out), c_in, c_out);
  }
  const auto bv = bias.values();
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t c = 0; c < c_out; ++c) out[t * c_out + c] += bv[c];
  }

  auto xi = x.impl(), ki = kernel.impl(), bi = bias.impl();
  return make_result(
      {len, c_out}, std::move(out), {x, kernel, bias},
      [xi, ki, bi, taps = std::move(taps), k, c_in, c_out, len, half,
       source_row](std::span<const double> g) {
        const auto dy = as_matrix(g, len, c_out);
        const auto xv = std::span<const double>(xi->values);
        if (ki->requires_grad) {
          auto dk = ki->grad_buffer();
          for (std::size_t j = 0; j < k; ++j) {
            const auto input = static_cast<std::ptrdiff_t>(j) == half
                                   ? xv
                                   : std::span<const double>(taps[j]);
            as_matrix(dk.subspan(j * c_in * c_out, c_in * c_out), c_in, c_out).noalias() +=
                as_matrix(input, len, c_in).transpose() * dy;
          }
        }
        if (bi->requires_grad) {
          auto db = bi->grad_buffer();
          for (std::size_t t = 0; t < len; ++t) {
            for (std::size_t c = 0; c < c_out; ++c) db[c] += g[t * c_out + c];
          }
        }
        if (xi->requires_grad) {
          auto dx = xi->grad_buffer();
          RowMat dtap(static_cast<Eigen::Index>(len), static_cast<Eigen::Index>(c_in));
          const auto kv = std::span<const double>(ki->values);
          for (std::size_t j = 0; j < k; ++j) {
            dtap.noalias() =
                dy * as_matrix(kv.subspan(j * c_in * c_out, c_in * c_out), c_in, c_out).transpose();
            for (std::size_t t = 0; t < len; ++t) {
              const auto src = source_row(t, j);
              if (src < 0) continue;
              for (std::size_t c = 0; c < c_in; ++c) {
                dx[static_cast<std::size_t>(src) * c_in + c] +=
                    dtap(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(c));
              }
            }
          }
        }
      });
}

Tensor conv1d_same(const Tensor& x, const Tensor& kernel, const Tensor& bias) {
  require_rank2(x, "conv1d_same");
  return conv1d_same_segments(x, kernel, bias, x.dim(0));
}

}  // namespace dsn::ad
