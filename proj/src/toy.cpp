// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Procedural glyph dataset for desk-scale runs.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

#include "rotssl/dataset.hpp"

namespace rotssl {

namespace {

bool in_box(double u, double v, double u0, double u1, double v0, double v1) {
  return u >= u0 && u <= u1 && v >= v0 && v <= v1;
}

bool in_disc(double u, double v, double cu, double cv, double r) {
  return (u - cu) * (u - cu) + (v - cv) * (v - cv) <= r * r;
}

// Glyph coverage in its own frame: u to the right, v downwards, both in
// [-1, 1]. None of the glyphs maps onto another under a quarter turn.
bool glyph(int cls, double u, double v) {
  switch (cls) {
    case 0:  // T
      return in_box(u, v, -0.75, 0.75, -0.75, -0.45) || in_box(u, v, -0.16, 0.16, -0.6, 0.8);
    case 1:  // L
      return in_box(u, v, -0.55, -0.25, -0.8, 0.8) || in_box(u, v, -0.55, 0.6, 0.5, 0.8);
    case 2:  // upward triangle
      return v >= -0.75 && v <= 0.65 && std::abs(u) <= (v + 0.75) * 0.55;
    case 3:  // house: roof over a body
      return in_box(u, v, -0.5, 0.5, 0.0, 0.75) || (v >= -0.8 && v < 0.0 && std::abs(u) <= (v + 0.8) * 0.95);
    case 4:  // lollipop
      return in_disc(u, v, 0.0, -0.4, 0.38) || in_box(u, v, -0.1, 0.1, -0.1, 0.85);
    case 5:  // face: two eyes over a mouth
      return in_disc(u, v, -0.38, -0.35, 0.2) || in_disc(u, v, 0.38, -0.35, 0.2) ||
             in_box(u, v, -0.55, 0.55, 0.3, 0.55);
    case 6:  // F
      return in_box(u, v, -0.55, -0.27, -0.8, 0.8) || in_box(u, v, -0.55, 0.55, -0.8, -0.52) ||
             in_box(u, v, -0.55, 0.3, -0.14, 0.12);
    case 7: {  // Y
      const bool stem = in_box(u, v, -0.13, 0.13, -0.05, 0.85);
      const bool arms = v >= -0.8 && v <= 0.0 && std::abs(std::abs(u) + v * 0.85) <= 0.17;
      return stem || arms;
    }
    default:
      throw std::invalid_argument("toy dataset: no glyph for class " + std::to_string(cls));
  }
}

const char* kGlyphNames[] = {"tee", "ell", "triangle", "house", "lollipop", "face", "eff", "wye"};

struct Distractor {
  bool disc;
  double cu, cv, a, b, angle;
};

bool covers(const Distractor& d, double px, double py) {
  const double du = px - d.cu, dv = py - d.cv;
  if (d.disc) return du * du + dv * dv <= d.a * d.a;
  const double u = std::cos(d.angle) * du + std::sin(d.angle) * dv;
  const double v = -std::sin(d.angle) * du + std::cos(d.angle) * dv;
  return std::abs(u) <= d.a && std::abs(v) <= d.b;
}

void render(int cls, int size, std::mt19937_64& rng, std::uint8_t* out) {
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const double scale = 0.55 + 0.4 * unit(rng);
  const double tx = (unit(rng) - 0.5) * 0.5;
  const double ty = (unit(rng) - 0.5) * 0.5;
  const double tilt = (unit(rng) - 0.5) * (30.0 * std::numbers::pi / 180.0);
  double fg[3], bg[3], ramp[3];
  for (int c = 0; c < 3; ++c) {
    fg[c] = 140 + 115 * unit(rng);
    bg[c] = 100 * unit(rng);
    ramp[c] = (unit(rng) - 0.5) * 80;
  }
  // Half of the images are dark glyphs on a light ground.
  if (unit(rng) < 0.5) {
    for (int c = 0; c < 3; ++c) std::swap(fg[c], bg[c]);
  }
  const double ramp_angle = unit(rng) * 2 * std::numbers::pi;
  const double rx = std::cos(ramp_angle), ry = std::sin(ramp_angle);

  std::vector<Distractor> clutter(2 + static_cast<int>(unit(rng) * 2));
  for (auto& d : clutter) {
    d.disc = unit(rng) < 0.5;
    d.cu = unit(rng) * 2 - 1;
    d.cv = unit(rng) * 2 - 1;
    d.a = d.disc ? 0.1 + 0.12 * unit(rng) : 0.2 + 0.3 * unit(rng);
    d.b = 0.06 + 0.06 * unit(rng);
    d.angle = unit(rng) * std::numbers::pi;
  }
  const double clutter_mix = 0.5 + 0.5 * unit(rng);

  std::normal_distribution<double> noise(0.0, 18.0);
  const double cs = std::cos(tilt), sn = std::sin(tilt);
  constexpr int kSuper = 3;
  const std::size_t plane = static_cast<std::size_t>(size) * size;
  for (int y = 0; y < size; ++y) {
    for (int x = 0; x < size; ++x) {
      int hits = 0, clutter_hits = 0;
      for (int sy = 0; sy < kSuper; ++sy) {
        for (int sx = 0; sx < kSuper; ++sx) {
          const double qx = (x + (sx + 0.5) / kSuper) / size * 2.0 - 1.0;
          const double qy = (y + (sy + 0.5) / kSuper) / size * 2.0 - 1.0;
          const double px = qx - tx, py = qy - ty;
          const double u = (cs * px + sn * py) / scale;
          const double v = (-sn * px + cs * py) / scale;
          hits += glyph(cls, u, v) ? 1 : 0;
          for (const auto& d : clutter) {
            if (covers(d, qx, qy)) {
              ++clutter_hits;
              break;
            }
          }
        }
      }
      const double cover = static_cast<double>(hits) / (kSuper * kSuper);
      const double extra = clutter_mix * static_cast<double>(clutter_hits) / (kSuper * kSuper);
      const double px = x / static_cast<double>(size - 1) - 0.5, py = y / static_cast<double>(size - 1) - 0.5;
      for (int c = 0; c < 3; ++c) {
        const double ground = bg[c] + ramp[c] * (px * rx + py * ry) * 2;
        const double base = ground + std::min(1.0, cover + extra) * (fg[c] - ground);
        out[c * plane + static_cast<std::size_t>(y) * size + x] =
            static_cast<std::uint8_t>(std::lround(std::clamp(base + noise(rng), 0.0, 255.0)));
      }
    }
  }
}

DatasetSplit render_split(std::mt19937_64& rng, int per_class, int size, int num_classes, Split split) {
  DatasetSplit out;
  out.channels = 3;
  out.size = size;
  out.split = split;
  for (int c = 0; c < num_classes; ++c) out.class_names.emplace_back(kGlyphNames[c]);
  out.pixels.resize(static_cast<std::size_t>(per_class) * num_classes * out.image_bytes());
  // Interleave classes so that any prefix is roughly balanced.
  std::size_t r = 0;
  for (int i = 0; i < per_class; ++i) {
    for (int c = 0; c < num_classes; ++c, ++r) {
      render(c, size, rng, out.pixels.data() + r * out.image_bytes());
      out.labels.push_back(c);
    }
  }
  return out;
}

}  // namespace

DatasetPair make_toy_dataset(std::uint64_t seed, int n_per_class, int size, int num_classes, int test_per_class) {
  if (size < 8) throw std::invalid_argument("make_toy_dataset: size must be at least 8");
  if (num_classes < 1 || num_classes > 8) throw std::invalid_argument("make_toy_dataset: 1 to 8 classes supported");
  if (n_per_class < 1) throw std::invalid_argument("make_toy_dataset: n_per_class must be positive");
  if (test_per_class < 0) test_per_class = std::max(1, n_per_class / 4);
  std::mt19937_64 rng(seed);
  DatasetPair pair;
  pair.train = render_split(rng, n_per_class, size, num_classes, Split::train);
  pair.test = render_split(rng, test_per_class, size, num_classes, Split::test);
  return pair;
}

}  // namespace rotssl
