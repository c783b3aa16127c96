// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/rotations.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace rotssl {

Image ImageBatch::image(int index) const {
  if (index < 0 || index >= count) throw std::out_of_range("ImageBatch::image index out of range");
  Image img(channels, height, width, range);
  const auto begin = pixels.begin() + static_cast<std::ptrdiff_t>(index * image_size());
  std::copy(begin, begin + static_cast<std::ptrdiff_t>(image_size()), img.pixels.begin());
  return img;
}

void ImageBatch::push_back(const Image& img) {
  if (count == 0 && pixels.empty()) {
    channels = img.channels;
    height = img.height;
    width = img.width;
    range = img.range;
  } else if (img.channels != channels || img.height != height || img.width != width) {
    throw std::invalid_argument("ImageBatch::push_back: image size differs from batch");
  }
  pixels.insert(pixels.end(), img.pixels.begin(), img.pixels.end());
  ++count;
}

void RotationTaskSpec::validate() const {
  if (K != 2 && K != 4 && K != 8) throw std::invalid_argument("rotation task: K must be 2, 4 or 8");
  if (static_cast<int>(angles.size()) != K) {
    throw std::invalid_argument("rotation task: expected " + std::to_string(K) + " angles");
  }
  for (std::size_t i = 0; i < angles.size(); ++i) {
    if (angles[i] < 0 || angles[i] >= 360) throw std::invalid_argument("rotation task: angle outside [0,360)");
    if (i > 0 && angles[i] <= angles[i - 1]) {
      throw std::invalid_argument("rotation task: angles must be strictly increasing");
    }
    if (mode == RotationMode::exact90 && std::fmod(angles[i], 90.0) != 0.0) {
      throw std::invalid_argument("rotation task: exact-90 mode only admits multiples of 90");
    }
  }
}

RotationTaskSpec RotationTaskSpec::four() { return {4, {0, 90, 180, 270}, RotationMode::exact90, "4"}; }

RotationTaskSpec RotationTaskSpec::eight() {
  return {8, {0, 45, 90, 135, 180, 225, 270, 315}, RotationMode::warp, "8"};
}

RotationTaskSpec RotationTaskSpec::upright_flip() { return {2, {0, 180}, RotationMode::exact90, "2a"}; }

RotationTaskSpec RotationTaskSpec::quarter_pair() { return {2, {90, 270}, RotationMode::exact90, "2b"}; }

RotationTaskSpec RotationTaskSpec::from_name(const std::string& name) {
  if (name == "4") return four();
  if (name == "8") return eight();
  if (name == "2a") return upright_flip();
  if (name == "2b") return quarter_pair();
  throw std::invalid_argument("unknown rotation task '" + name + "' (expected 4, 8, 2a or 2b)");
}

namespace {

void require_square(const Image& img, const char* op) {
  if (img.height != img.width) {
    throw std::invalid_argument(std::string(op) + ": image must be square, got " +
                                std::to_string(img.height) + "x" + std::to_string(img.width));
  }
}

}  // namespace

Image transpose(const Image& img) {
  Image out(img.channels, img.width, img.height, img.range);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out.at(c, x, y) = img.at(c, y, x);
  return out;
}

Image flip_vertical(const Image& img) {
  Image out(img.channels, img.height, img.width, img.range);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out.at(c, img.height - 1 - y, x) = img.at(c, y, x);
  return out;
}

Image flip_horizontal(const Image& img) {
  Image out(img.channels, img.height, img.width, img.range);
  for (int c = 0; c < img.channels; ++c)
    for (int y = 0; y < img.height; ++y)
      for (int x = 0; x < img.width; ++x) out.at(c, y, img.width - 1 - x) = img.at(c, y, x);
  return out;
}

Image rot90_exact(const Image& img, int quarter_turns) {
  require_square(img, "rot90_exact");
  switch (((quarter_turns % 4) + 4) % 4) {
    case 0:
      return img;
    case 1:
      return flip_vertical(transpose(img));
    case 2:
      return flip_horizontal(flip_vertical(img));
    default:
      return transpose(flip_vertical(img));
  }
}

Image rotate_warp(const Image& img, double degrees, Interpolation interp) {
  require_square(img, "rotate_warp");
  if (!(degrees >= 0.0 && degrees < 360.0)) throw std::invalid_argument("rotate_warp: degrees outside [0,360)");
  const int size = img.height;
  const double crop = std::floor(size / std::numbers::sqrt2);
  const double centre = (size - 1) / 2.0;
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double hi = size - 1;

  Image out(img.channels, size, size, img.range);
  for (int i = 0; i < size; ++i) {
    const double ry = ((i + 0.5) / size - 0.5) * crop;
    for (int j = 0; j < size; ++j) {
      const double rx = ((j + 0.5) / size - 0.5) * crop;
      // Same orientation as rot90_exact: 90 degrees maps (x, y) -> (-y, x).
      const double sx = std::clamp(centre + rx * cs - ry * sn, 0.0, hi);
      const double sy = std::clamp(centre + rx * sn + ry * cs, 0.0, hi);
      if (interp == Interpolation::nearest) {
        const int nx = static_cast<int>(std::lround(sx));
        const int ny = static_cast<int>(std::lround(sy));
        for (int c = 0; c < img.channels; ++c) out.at(c, i, j) = img.at(c, ny, nx);
        continue;
      }
      const int x0 = std::min(static_cast<int>(sx), size - 1);
      const int y0 = std::min(static_cast<int>(sy), size - 1);
      const int x1 = std::min(x0 + 1, size - 1);
      const int y1 = std::min(y0 + 1, size - 1);
      const double fx = sx - x0;
      const double fy = sy - y0;
      for (int c = 0; c < img.channels; ++c) {
        const double top = img.at(c, y0, x0) * (1 - fx) + img.at(c, y0, x1) * fx;
        const double bottom = img.at(c, y1, x0) * (1 - fx) + img.at(c, y1, x1) * fx;
        out.at(c, i, j) = static_cast<float>(top * (1 - fy) + bottom * fy);
      }
    }
  }
  return out;
}

Image apply_g(const Image& img, RotationLabel label, const RotationTaskSpec& spec, Interpolation interp) {
  if (label.K != spec.K) {
    throw std::invalid_argument("apply_g: label has K=" + std::to_string(label.K) + " but task has K=" +
                                std::to_string(spec.K));
  }
  if (label.y < 0 || label.y >= spec.K) throw std::out_of_range("apply_g: label outside [0,K)");
  const double angle = spec.angles[static_cast<std::size_t>(label.y)];
  if (spec.mode == RotationMode::exact90) return rot90_exact(img, static_cast<int>(angle / 90.0));
  return rotate_warp(img, angle, interp);
}

SslBatch build_ssl_batch(const ImageBatch& imgs, const RotationTaskSpec& spec, Interpolation interp) {
  if (imgs.count == 0) throw std::invalid_argument("build_ssl_batch: empty batch");
  spec.validate();
  if (imgs.height != imgs.width) throw std::invalid_argument("build_ssl_batch: images must be square");
  SslBatch out;
  out.images.count = imgs.count * spec.K;
  out.images.channels = imgs.channels;
  out.images.height = imgs.height;
  out.images.width = imgs.width;
  out.images.range = imgs.range;
  out.images.pixels.reserve(static_cast<std::size_t>(out.images.count) * imgs.image_size());
  out.labels.reserve(static_cast<std::size_t>(out.images.count));
  for (int b = 0; b < imgs.count; ++b) {
    const Image src = imgs.image(b);
    for (int y = 0; y < spec.K; ++y) {
      const Image rotated = apply_g(src, {y, spec.K}, spec, interp);
      out.images.pixels.insert(out.images.pixels.end(), rotated.pixels.begin(), rotated.pixels.end());
      out.labels.push_back(y);
    }
  }
  return out;
}

}  // namespace rotssl
