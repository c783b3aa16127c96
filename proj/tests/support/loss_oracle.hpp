// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Brute-force rotation loss: one eval-mode forward per (image, rotation),
// quarter turns by direct indexing, log-softmax accumulated in double.

#pragma once

#include <cmath>
#include <stdexcept>

#include "rotssl/dataset.hpp"
#include "rotssl/model.hpp"

namespace rotssl::testing {

// Counter-clockwise quarter turns: out(y, x) = in(x, S-1-y) per turn.
inline Image quarter_turns_by_index(const Image& img, int turns) {
  Image cur = img;
  for (int t = 0; t < ((turns % 4) + 4) % 4; ++t) {
    Image next(cur.channels, cur.height, cur.width, cur.range);
    const int s = cur.height;
    for (int c = 0; c < cur.channels; ++c) {
      for (int y = 0; y < s; ++y) {
        for (int x = 0; x < s; ++x) next.at(c, y, x) = cur.at(c, x, s - 1 - y);
      }
    }
    cur = next;
  }
  return cur;
}

// Sets every BN running statistic to the batch statistics of `raw`'s rotated
// copies, so eval-mode activations stay in a realistic range.
inline void calibrate_batchnorm(const ModelSpec& spec, ModelState<float>& state, const ImageBatch& raw,
                                const Normalization& norm) {
  auto ssl = build_ssl_batch(raw, RotationTaskSpec::four());
  normalize_in_place(ssl.images, norm);
  for (auto& [name, bn] : state.norm_states) bn.momentum = 1.0f;
  forward(spec, state, to_tensor(ssl.images), Mode::train);
  for (auto& [name, bn] : state.norm_states) bn.momentum = 0.1f;
}

inline double brute_force_rotation_loss(const ModelSpec& spec, ModelState<float>& state, const ImageBatch& raw,
                                        const Normalization& norm) {
  if (spec.num_classes != 4) throw std::invalid_argument("oracle covers the four-rotation task");
  double total = 0;
  for (int i = 0; i < raw.count; ++i) {
    double per_image = 0;
    for (int y = 0; y < 4; ++y) {
      auto rotated = quarter_turns_by_index(raw.image(i), y);
      const int plane = rotated.height * rotated.width;
      std::vector<float> values(rotated.pixels.size());
      for (int c = 0; c < rotated.channels; ++c) {
        for (int k = 0; k < plane; ++k) {
          values[c * plane + k] = (rotated.pixels[c * plane + k] - norm.mean[c]) * (1.0f / norm.stddev[c]);
        }
      }
      Tensor<float> x({1, rotated.channels, rotated.height, rotated.width}, values);
      const auto out = forward(spec, state, x, Mode::eval);
      const auto logits = out.data();
      double mx = logits[0];
      for (float v : logits) mx = std::max(mx, static_cast<double>(v));
      double z = 0;
      for (float v : logits) z += std::exp(static_cast<double>(v) - mx);
      per_image += -(static_cast<double>(logits[y]) - mx - std::log(z));
    }
    total += per_image / 4.0;
  }
  return total / raw.count;
}

}  // namespace rotssl::testing
