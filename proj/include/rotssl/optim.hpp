// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <functional>
#include <span>
#include <stdexcept>
#include <vector>

#include "rotssl/tensor.hpp"

namespace rotssl {

class NonFiniteError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

template <typename T>
struct OptimizerState {
  T lr = T(0.1);
  T momentum = T(0.9);
  T weight_decay = T(5e-4);
  // One buffer per parameter, created on the first step.
  std::vector<std::vector<T>> velocity;
};

/// Classic momentum SGD with L2 decay folded into the gradient:
///   g' = grad + wd*p;  v = momentum*v + g';  p -= lr*v
/// A parameter with no gradient contributes grad = 0. Any non-finite gradient
/// aborts the whole step before a single value is modified.
template <typename T>
void sgd_step(std::span<Tensor<T>> params, OptimizerState<T>& opt);

/// Max relative error between central differences of `fn` and the analytic
/// gradient left in each parameter by backward(fn()). Relative error uses
/// max(|a|, |b|, 1e-8) as denominator. `coords_per_param` (when > 0) checks
/// that many evenly spaced coordinates of each parameter instead of all.
double finite_diff_gradcheck(const std::function<Tensor<double>()>& fn,
                             std::span<Tensor<double>> params, double eps = 1e-3,
                             std::size_t coords_per_param = 0);

}  // namespace rotssl
