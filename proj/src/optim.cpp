// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/optim.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "rotssl/ops.hpp"

namespace rotssl {

template <typename T>
void sgd_step(std::span<Tensor<T>> params, OptimizerState<T>& opt) {
  if (opt.velocity.empty()) {
    opt.velocity.reserve(params.size());
    for (const auto& p : params) opt.velocity.emplace_back(p.size(), T(0));
  }
  if (opt.velocity.size() != params.size()) {
    throw ShapeError("sgd_step: " + std::to_string(params.size()) + " parameters but " +
                     std::to_string(opt.velocity.size()) + " velocity buffers");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (opt.velocity[i].size() != params[i].size()) {
      throw ShapeError("sgd_step: velocity buffer " + std::to_string(i) + " has " +
                       std::to_string(opt.velocity[i].size()) + " values, parameter has " +
                       std::to_string(params[i].size()));
    }
    for (T g : params[i].grad()) {
      if (!std::isfinite(g)) {
        throw NonFiniteError("sgd_step: non-finite gradient in parameter " + std::to_string(i));
      }
    }
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto data = params[i].data();
    const auto grad = params[i].grad();
    auto& vel = opt.velocity[i];
    for (std::size_t j = 0; j < data.size(); ++j) {
      const T g = (grad.empty() ? T(0) : grad[j]) + opt.weight_decay * data[j];
      vel[j] = opt.momentum * vel[j] + g;
      data[j] -= opt.lr * vel[j];
    }
  }
}

template void sgd_step<float>(std::span<Tensor<float>>, OptimizerState<float>&);
template void sgd_step<double>(std::span<Tensor<double>>, OptimizerState<double>&);

double finite_diff_gradcheck(const std::function<Tensor<double>()>& fn,
                             std::span<Tensor<double>> params, double eps,
                             std::size_t coords_per_param) {
  for (auto& p : params) p.zero_grad();
  backward(fn());
  std::vector<std::vector<double>> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) {
    const auto g = p.grad();
    analytic.emplace_back(g.empty() ? std::vector<double>(p.size(), 0.0)
                                    : std::vector<double>(g.begin(), g.end()));
  }

  double worst = 0.0;
  NoGradGuard no_grad;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto data = params[pi].data();
    const std::size_t n = data.size();
    const std::size_t checks = coords_per_param == 0 ? n : std::min(n, coords_per_param);
    for (std::size_t k = 0; k < checks; ++k) {
      const std::size_t j = checks == n ? k : (k * n) / checks + (n / checks) / 2;
      const double saved = data[j];
      data[j] = saved + eps;
      const double up = fn().item();
      data[j] = saved - eps;
      const double down = fn().item();
      data[j] = saved;
      const double numeric = (up - down) / (2.0 * eps);
      const double exact = analytic[pi][j];
      const double denom = std::max({std::abs(numeric), std::abs(exact), 1e-8});
      worst = std::max(worst, std::abs(numeric - exact) / denom);
    }
  }
  return worst;
}

}  // namespace rotssl
