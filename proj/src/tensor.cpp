// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/tensor.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace rotssl {

std::size_t shape_numel(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) {
    if (extent <= 0) throw ShapeError("tensor extents must be positive, got " + shape_str(shape));
    n *= static_cast<std::size_t>(extent);
  }
  return n;
}

std::string shape_str(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) os << (i ? "," : "") << shape[i];
  os << ']';
  return os.str();
}

namespace {
thread_local bool g_grad_enabled = true;
}

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

template <typename T>
Tensor<T>::Tensor() : node_(std::make_shared<detail::TensorNode<T>>()) {
  node_->shape = {1};
  node_->data.assign(1, T(0));
}

template <typename T>
Tensor<T>::Tensor(Shape shape, T fill, bool requires_grad)
    : node_(std::make_shared<detail::TensorNode<T>>()) {
  const auto n = shape_numel(shape);
  node_->shape = std::move(shape);
  node_->data.assign(n, fill);
  node_->requires_grad = requires_grad;
}

template <typename T>
Tensor<T>::Tensor(Shape shape, std::vector<T> values, bool requires_grad)
    : node_(std::make_shared<detail::TensorNode<T>>()) {
  const auto n = shape_numel(shape);
  if (values.size() != n) {
    throw ShapeError("tensor data length " + std::to_string(values.size()) +
                     " does not match shape " + shape_str(shape));
  }
  node_->shape = std::move(shape);
  node_->data.assign(values.begin(), values.end());
  node_->requires_grad = requires_grad;
}

template <typename T>
std::int64_t Tensor<T>::dim(std::size_t axis) const {
  if (axis >= node_->shape.size()) {
    throw ShapeError("axis " + std::to_string(axis) + " out of range for shape " +
                     shape_str(node_->shape));
  }
  return node_->shape[axis];
}

template <typename T>
T Tensor<T>::item() const {
  if (node_->data.size() != 1) {
    throw ShapeError("item() on tensor of shape " + shape_str(node_->shape));
  }
  return node_->data[0];
}

template <typename T>
Tensor<T> Tensor<T>::clone() const {
  Tensor out(node_->shape, T(0), node_->requires_grad);
  out.node_->data = node_->data;
  return out;
}

template <typename T>
Tensor<T> Tensor<T>::reshape(Shape shape) const {
  if (shape_numel(shape) != size()) {
    throw ShapeError("cannot reshape " + shape_str(node_->shape) + " to " + shape_str(shape));
  }
  auto parent = node_;
  return detail::make_result<T>(
      std::move(shape), node_->data, {parent}, [parent](detail::TensorNode<T>& self) {
        parent->ensure_grad();
        for (std::size_t i = 0; i < self.grad.size(); ++i) parent->grad[i] += self.grad[i];
      });
}

template <typename T>
Tensor<T> Tensor<T>::from_node(std::shared_ptr<detail::TensorNode<T>> node) {
  Tensor t;
  t.node_ = std::move(node);
  return t;
}

namespace detail {

template <typename T>
Tensor<T> make_result(Shape shape, Buffer<T> values,
                      std::vector<std::shared_ptr<TensorNode<T>>> parents,
                      std::function<void(TensorNode<T>&)> backward_fn) {
  auto node = std::make_shared<TensorNode<T>>();
  node->shape = std::move(shape);
  node->data = std::move(values);
  const bool track =
      grad_enabled() && std::any_of(parents.begin(), parents.end(),
                                    [](const auto& p) { return p && p->requires_grad; });
  if (track) {
    node->requires_grad = true;
    node->parents = std::move(parents);
    node->backward_fn = std::move(backward_fn);
  }
  return Tensor<T>::from_node(std::move(node));
}

}  // namespace detail

template <typename T>
void backward(const Tensor<T>& loss) {
  if (loss.size() != 1) {
    throw ShapeError("backward() needs a scalar loss, got shape " + shape_str(loss.shape()));
  }
  using Node = detail::TensorNode<T>;
  const auto& root = loss.node();
  if (!root->requires_grad) return;

  // Iterative post-order DFS; `order` ends up parents-before-children.
  std::vector<Node*> order;
  std::unordered_set<Node*> visited;
  std::vector<std::pair<Node*, std::size_t>> stack{{root.get(), 0}};
  visited.insert(root.get());
  while (!stack.empty()) {
    auto& [node, next] = stack.back();
    if (next < node->parents.size()) {
      Node* parent = node->parents[next++].get();
      if (parent->requires_grad && visited.insert(parent).second) stack.push_back({parent, 0});
    } else {
      order.push_back(node);
      stack.pop_back();
    }
  }

  for (Node* node : order) {
    if (node->backward_fn) node->grad.assign(node->data.size(), T(0));
  }
  root->ensure_grad();
  root->grad[0] += T(1);
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    Node* node = *it;
    if (node->backward_fn) node->backward_fn(*node);
  }
}

template class Tensor<float>;
template class Tensor<double>;
template void backward<float>(const Tensor<float>&);
template void backward<double>(const Tensor<double>&);
template Tensor<float> detail::make_result<float>(
    Shape, Buffer<float>, std::vector<std::shared_ptr<detail::TensorNode<float>>>,
    std::function<void(detail::TensorNode<float>&)>);
template Tensor<double> detail::make_result<double>(
    Shape, Buffer<double>, std::vector<std::shared_ptr<detail::TensorNode<double>>>,
    std::function<void(detail::TensorNode<double>&)>);

}  // namespace rotssl
