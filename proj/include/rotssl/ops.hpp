// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Differentiable layer primitives. All image tensors are N,C,H,W row-major.

#pragma once

#include <span>
#include <vector>

#include "rotssl/tensor.hpp"

namespace rotssl {

enum class Mode { train, eval };

template <typename T>
struct BatchNormState {
  std::vector<T> running_mean;
  std::vector<T> running_var;
  T momentum = T(0.1);
  T epsilon = T(1e-5);

  explicit BatchNormState(std::size_t channels = 0)
      : running_mean(channels, T(0)), running_var(channels, T(1)) {}
};

/// Cross-correlation with zero padding. weight is [F,C,kh,kw], bias is [F].
template <typename T>
Tensor<T> conv2d(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias,
                 int stride = 1, int pad = 0);

/// Per-channel normalization over every axis except 1. Train mode uses batch
/// statistics and updates `state`; eval mode reads the running statistics.
template <typename T>
Tensor<T> batch_norm(const Tensor<T>& input, const Tensor<T>& gamma, const Tensor<T>& beta,
                     BatchNormState<T>& state, Mode mode);

template <typename T>
Tensor<T> relu(const Tensor<T>& input);

/// Windowed max with -inf padding. Output extent floor((H+2p-k)/s)+1.
/// Gradient goes to the first maximal element in row-major window order.
template <typename T>
Tensor<T> max_pool2d(const Tensor<T>& input, int kernel, int stride, int pad = 0);

template <typename T>
Tensor<T> global_avg_pool(const Tensor<T>& input);

/// [N, ...] -> [N, prod(...)]
template <typename T>
Tensor<T> flatten(const Tensor<T>& input);

/// input [N,D] times weight [D,M] plus bias [M].
template <typename T>
Tensor<T> dense(const Tensor<T>& input, const Tensor<T>& weight, const Tensor<T>& bias);

/// Mean over rows of -log softmax(logits)[label], max-subtracted.
template <typename T>
Tensor<T> softmax_cross_entropy(const Tensor<T>& logits, std::span<const int> labels);

/// Row-wise softmax of a [N,K] tensor (not tracked).
template <typename T>
std::vector<T> softmax(const Tensor<T>& logits);

template <typename T>
Tensor<T> sum(const Tensor<T>& input);

template <typename T>
Tensor<T> add(const Tensor<T>& a, const Tensor<T>& b);

template <typename T>
Tensor<T> mul(const Tensor<T>& a, const Tensor<T>& b);

}  // namespace rotssl
