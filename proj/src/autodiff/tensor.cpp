#include "dsn/autodiff/tensor.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "dsn/errors.hpp"

namespace dsn::ad {

std::size_t shape_numel(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_to_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) os << 'x';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

std::span<double> TensorImpl::grad_buffer() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
  return grad;
}

Tensor::Tensor(Shape shape, std::vector<double> values, bool requires_grad) {
  if (shape_numel(shape) != values.size()) {
    throw DimensionError("tensor shape " + shape_to_string(shape) + " does not match " +
                         std::to_string(values.size()) + " values");
  }
  impl_ = std::make_shared<TensorImpl>();
  impl_->shape = std::move(shape);
  impl_->values = std::move(values);
  impl_->requires_grad = requires_grad;
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, 0.0), requires_grad);
}

Tensor Tensor::filled(Shape shape, double value) {
  const auto n = shape_numel(shape);
  return Tensor(std::move(shape), std::vector<double>(n, value));
}

Tensor Tensor::scalar(double value) { return Tensor(Shape{}, {value}); }

Tensor Tensor::vector(std::vector<double> values) {
  const auto n = values.size();
  return Tensor(Shape{n}, std::move(values));
}

Tensor Tensor::matrix(std::size_t rows, std::size_t cols, std::vector<double> values) {
  return Tensor(Shape{rows, cols}, std::move(values));
}

const Shape& Tensor::shape() const { return impl_->shape; }

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= rank()) {
    throw DimensionError("axis " + std::to_string(axis) + " out of range for shape " +
                         shape_to_string(shape()));
  }
  return shape()[axis];
}

std::size_t Tensor::numel() const { return impl_->values.size(); }

std::size_t Tensor::cols() const { return rank() == 0 ? 1 : shape().back(); }

std::size_t Tensor::rows() const {
  const auto c = cols();
  return c == 0 ? 0 : numel() / c;
}

std::span<const double> Tensor::values() const { return impl_->values; }
std::span<double> Tensor::mutable_values() { return impl_->values; }

double Tensor::item() const {
  if (numel() != 1) {
    throw DimensionError("item() on tensor of shape " + shape_to_string(shape()));
  }
  return impl_->values[0];
}

double Tensor::at(std::size_t r, std::size_t c) const { return impl_->values[r * cols() + c]; }

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool on) { impl_->requires_grad = on; }
bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

Tensor Tensor::detach() const { return Tensor(impl_->shape, impl_->values, false); }

Tensor Tensor::clone() const { return Tensor(impl_->shape, impl_->values, impl_->requires_grad); }

Tensor Tensor::reshape(Shape new_shape) const {
  if (shape_numel(new_shape) != numel()) {
    throw DimensionError("cannot reshape " + shape_to_string(shape()) + " to " +
                         shape_to_string(new_shape));
  }
  auto src = impl_;
  return make_result(std::move(new_shape), impl_->values, {*this},
                     [src](std::span<const double> g) {
                       auto dst = src->grad_buffer();
                       for (std::size_t i = 0; i < g.size(); ++i) dst[i] += g[i];
                     });
}

Tensor make_result(Shape shape, std::vector<double> values, std::vector<Tensor> inputs,
                   std::function<void(std::span<const double>)> backward) {
  Tensor out(std::move(shape), std::move(values));
  const bool track = std::any_of(inputs.begin(), inputs.end(),
                                 [](const Tensor& t) { return t.defined() && t.requires_grad(); });
  if (!track) return out;
  auto node = std::make_shared<Node>();
  node->inputs.reserve(inputs.size());
  for (auto& t : inputs) {
    if (t.defined()) node->inputs.push_back(t.impl());
  }
  node->backward = std::move(backward);
  out.impl_->requires_grad = true;
  out.impl_->node = std::move(node);
  return out;
}

GradTape GradTape::record(const Tensor& root) {
  GradTape tape;
  tape.root_ = root.impl();
  // Iterative post-order DFS; the graph is a DAG so `done` suffices.
  std::unordered_set<const TensorImpl*> done;
  std::vector<std::pair<std::shared_ptr<TensorImpl>, std::size_t>> stack;
  if (root.impl()->node) stack.emplace_back(root.impl(), 0);
  while (!stack.empty()) {
    auto& [impl, next] = stack.back();
    if (next < impl->node->inputs.size()) {
      auto child = impl->node->inputs[next++];
      if (child->node && !done.contains(child.get())) stack.emplace_back(std::move(child), 0);
      continue;
    }
    if (done.insert(impl.get()).second) tape.order_.push_back(impl);
    stack.pop_back();
  }
  return tape;
}

void GradTape::replay() const {
  for (const auto& impl : order_) impl->grad.assign(impl->values.size(), 0.0);
  root_->grad_buffer()[0] += 1.0;
  for (auto it = order_.rbegin(); it != order_.rend(); ++it) {
    const auto& impl = *it;
    impl->node->backward(impl->grad);
  }
  // Interior gradients are scratch space.
  for (const auto& impl : order_) {
    if (impl != root_) std::vector<double>().swap(impl->grad);
  }
}

void backward(const Tensor& loss) {
  if (!loss.defined() || loss.numel() != 1) {
    throw DimensionError("backward() needs a scalar root, got shape " +
                         (loss.defined() ? shape_to_string(loss.shape()) : std::string("<null>")));
  }
  if (!loss.requires_grad()) {
    throw DimensionError("backward() root is not connected to any tracked tensor");
  }
  if (!loss.impl()->node) {
    loss.impl()->grad_buffer()[0] += 1.0;
    return;
  }
  GradTape::record(loss).replay();
}

}  // namespace dsn::ad
