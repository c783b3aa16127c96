// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Finite-difference oracle for piecewise-smooth networks. A coordinate is
// compared only when the relu sign pattern and every max-pool winner are the
// same at p-eps, p and p+eps; otherwise the central difference spans a kink
// and says nothing about the derivative.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "rotssl/model.hpp"

namespace rotssl::testing {

inline std::vector<std::int32_t> activation_pattern(const ModelSpec& spec, ModelState<double>& state,
                                                    const Tensor<double>& input) {
  NoGradGuard guard;
  std::vector<std::int32_t> pattern;
  Tensor<double> h = input;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    const auto& kind = spec.layers[i].kind;
    if (std::holds_alternative<ReluLayer>(kind)) {
      for (double v : h.data()) pattern.push_back(v > 0 ? 1 : 0);
    } else if (const auto* pool = std::get_if<MaxPoolLayer>(&kind)) {
      const auto planes = h.dim(0) * h.dim(1), H = h.dim(2), W = h.dim(3);
      const auto oh = (H + 2 * pool->pad - pool->kernel) / pool->stride + 1;
      const auto ow = (W + 2 * pool->pad - pool->kernel) / pool->stride + 1;
      for (std::int64_t pl = 0; pl < planes; ++pl) {
        const double* src = h.data().data() + pl * H * W;
        for (std::int64_t oy = 0; oy < oh; ++oy) {
          for (std::int64_t ox = 0; ox < ow; ++ox) {
            std::int32_t winner = -1;
            double best = -INFINITY;
            for (int a = 0; a < pool->kernel; ++a) {
              for (int b = 0; b < pool->kernel; ++b) {
                const auto iy = oy * pool->stride - pool->pad + a;
                const auto ix = ox * pool->stride - pool->pad + b;
                if (iy < 0 || ix < 0 || iy >= H || ix >= W) continue;
                if (src[iy * W + ix] > best) {
                  best = src[iy * W + ix];
                  winner = a * pool->kernel + b;
                }
              }
            }
            pattern.push_back(winner);
          }
        }
      }
    }
    h = forward_range(spec, state, h, Mode::eval, i, i + 1);
  }
  return pattern;
}

struct KinkAwareResult {
  double max_rel_error = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
};

/// Eval-mode softmax cross-entropy of the model. Checks `coords_per_param`
/// evenly spaced coordinates of each parameter and of the input.
inline KinkAwareResult kink_aware_gradcheck(const ModelSpec& spec, ModelState<double>& state,
                                            Tensor<double> input, std::span<const int> labels, double eps,
                                            std::size_t coords_per_param) {
  auto loss = [&] { return softmax_cross_entropy(forward(spec, state, input, Mode::eval), labels); };
  auto params = parameter_list(spec, state, false);
  input.set_requires_grad(true);
  params.push_back(input);
  for (auto& p : params) p.zero_grad();
  backward(loss());
  const auto base = activation_pattern(spec, state, input);

  KinkAwareResult out;
  for (auto& p : params) {
    const std::vector<double> analytic(p.grad().begin(), p.grad().end());
    const std::size_t n = p.size();
    const std::size_t count = coords_per_param == 0 ? n : std::min(n, coords_per_param);
    for (std::size_t k = 0; k < count; ++k) {
      const std::size_t i = count == n ? k : k * n / count;
      const double orig = p.data()[i];
      p.data()[i] = orig + eps;
      const double up = [&] { NoGradGuard g; return loss().item(); }();
      const bool up_same = activation_pattern(spec, state, input) == base;
      p.data()[i] = orig - eps;
      const double down = [&] { NoGradGuard g; return loss().item(); }();
      const bool down_same = activation_pattern(spec, state, input) == base;
      p.data()[i] = orig;
      if (!up_same || !down_same) {
        ++out.skipped;
        continue;
      }
      const double numeric = (up - down) / (2 * eps);
      const double a = analytic.empty() ? 0.0 : analytic[i];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
      out.max_rel_error = std::max(out.max_rel_error, rel);
      ++out.checked;
    }
  }
  return out;
}

}  // namespace rotssl::testing
