#pragma once

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace dsn::ad {

using Shape = std::vector<std::size_t>;

std::size_t shape_numel(const Shape& shape);
std::string shape_to_string(const Shape& shape);

struct TensorImpl;

// Backward-graph record attached to a computed tensor. `backward` receives the
// gradient of the output and accumulates into the inputs' grad buffers.
struct Node {
  std::vector<std::shared_ptr<TensorImpl>> inputs;
  std::function<void(std::span<const double> out_grad)> backward;
};

struct TensorImpl {
  Shape shape;
  std::vector<double> values;
  std::vector<double> grad;  // empty until a gradient is first written
  bool requires_grad = false;
  std::shared_ptr<Node> node;

  std::span<double> grad_buffer();  // allocates zeros on first use
};

// Dense row-major float64 array with optional gradient tracking.
//
// Tensor is a cheap handle: copies share storage. Use `detach()` or
// `clone()` for an independent value.
class Tensor {
 public:
  Tensor() = default;
  Tensor(Shape shape, std::vector<double> values, bool requires_grad = false);

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value);
  static Tensor scalar(double value);
  static Tensor vector(std::vector<double> values);
  static Tensor matrix(std::size_t rows, std::size_t cols, std::vector<double> values);

  bool defined() const noexcept { return impl_ != nullptr; }
  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t dim(std::size_t axis) const;
  std::size_t numel() const;
  // 2-D view helpers: rows = product of all but the last dim.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double item() const;
  double operator[](std::size_t i) const { return values()[i]; }
  double at(std::size_t r, std::size_t c) const;

  bool requires_grad() const;
  void set_requires_grad(bool on);
  bool has_grad() const;
  std::span<const double> grad() const;  // empty span when no gradient yet
  void zero_grad();

  // Same values, no graph, no gradient tracking.
  Tensor detach() const;
  // Deep copy of values (and requires_grad flag), fresh gradient.
  Tensor clone() const;
  // Copy with a new shape of equal element count. Gradient flows through.
  Tensor reshape(Shape shape) const;

  const std::shared_ptr<TensorImpl>& impl() const { return impl_; }
  bool same_storage(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  explicit Tensor(std::shared_ptr<TensorImpl> impl) : impl_(std::move(impl)) {}
  friend Tensor make_result(Shape shape, std::vector<double> values,
                            std::vector<Tensor> inputs,
                            std::function<void(std::span<const double>)> backward);

  std::shared_ptr<TensorImpl> impl_;
};

// Builds an op output. When any input requires a gradient, the output records
// a Node with `backward`; otherwise the closure is dropped.
Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   std::function<void(std::span<const double>)> backward);

// Topologically ordered record of every graph node reachable from a root.
// Replaying it in reverse applies each node's backward rule exactly once.
class GradTape {
 public:
  static GradTape record(const Tensor& root);

  // Seeds d(root)/d(root) = 1 and propagates. Intermediate gradients are
  // rebuilt from scratch on every replay; leaf gradients accumulate.
  void replay() const;

  std::size_t size() const noexcept { return order_.size(); }

 private:
  std::shared_ptr<TensorImpl> root_;
  std::vector<std::shared_ptr<TensorImpl>> order_;  // inputs before outputs
};

// Computes d(loss)/d(leaf) for every tracked leaf reachable from `loss`.
// `loss` must hold exactly one element.
void backward(const Tensor& loss);

}  // namespace dsn::ad
