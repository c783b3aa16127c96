// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Dense N-d tensors with tape-based reverse-mode differentiation.

#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <new>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace rotssl {

using Shape = std::vector<std::int64_t>;

/// Cache-line aligned storage, so vectorized kernels see the same alignment
/// on every run.
template <typename T>
struct AlignedAllocator {
  using value_type = T;
  static constexpr std::align_val_t alignment{64};

  AlignedAllocator() = default;
  template <typename U>
  AlignedAllocator(const AlignedAllocator<U>&) {}

  T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), alignment)); }
  void deallocate(T* p, std::size_t) { ::operator delete(p, alignment); }

  template <typename U>
  bool operator==(const AlignedAllocator<U>&) const { return true; }
};

template <typename T>
using Buffer = std::vector<T, AlignedAllocator<T>>;

std::size_t shape_numel(const Shape& shape);
std::string shape_str(const Shape& shape);

/// Raised when operand shapes are incompatible. The message names the
/// offending dimension.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

namespace detail {

template <typename T>
struct TensorNode {
  Shape shape;
  Buffer<T> data;
  Buffer<T> grad;  // empty until first written
  bool requires_grad = false;
  std::vector<std::shared_ptr<TensorNode>> parents;
  // Reads this->grad and accumulates into parents' grads.
  std::function<void(TensorNode&)> backward_fn;

  void ensure_grad() {
    if (grad.size() != data.size()) grad.assign(data.size(), T(0));
  }
};

}  // namespace detail

/// Handle to a shared tensor node. Copies alias the same storage; use
/// clone() for a deep, graph-detached copy.
template <typename T>
class Tensor {
 public:
  using value_type = T;

  Tensor();
  explicit Tensor(Shape shape, T fill = T(0), bool requires_grad = false);
  Tensor(Shape shape, std::vector<T> values, bool requires_grad = false);

  const Shape& shape() const { return node_->shape; }
  std::int64_t dim(std::size_t axis) const;
  std::size_t rank() const { return node_->shape.size(); }
  std::size_t size() const { return node_->data.size(); }

  std::span<T> data() { return node_->data; }
  std::span<const T> data() const { return node_->data; }
  T item() const;

  bool requires_grad() const { return node_->requires_grad; }
  void set_requires_grad(bool flag) { node_->requires_grad = flag; }
  bool has_grad() const { return !node_->grad.empty(); }
  /// Gradient values; empty span if never written.
  std::span<const T> grad() const { return node_->grad; }
  std::span<T> mutable_grad() { return node_->grad; }
  void zero_grad() { node_->grad.clear(); }

  /// Non-leaf tensors carry a backward closure.
  bool is_leaf() const { return !node_->backward_fn; }

  Tensor clone() const;
  Tensor reshape(Shape shape) const;

  const std::shared_ptr<detail::TensorNode<T>>& node() const { return node_; }
  static Tensor from_node(std::shared_ptr<detail::TensorNode<T>> node);

 private:
  std::shared_ptr<detail::TensorNode<T>> node_;
};

/// Whether newly created op outputs record a backward closure.
bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

/// Reverse-mode sweep from a scalar. Leaf gradients accumulate across calls;
/// interior gradients are recomputed from zero on every call.
template <typename T>
void backward(const Tensor<T>& loss);

namespace detail {

/// Builds an op output. Attaches parents/backward only when gradients are
/// enabled and some parent requires them.
template <typename T>
Tensor<T> make_result(Shape shape, Buffer<T> values,
                      std::vector<std::shared_ptr<TensorNode<T>>> parents,
                      std::function<void(TensorNode<T>&)> backward_fn);

}  // namespace detail

}  // namespace rotssl
