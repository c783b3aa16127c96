// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// The rotation transformation set and self-supervised batch construction.

#pragma once

#include <string>
#include <vector>

namespace rotssl {

enum class ValueRange { raw_bytes, normalized };

/// One C,H,W raster.
struct Image {
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;
  ValueRange range = ValueRange::raw_bytes;

  Image() = default;
  Image(int c, int h, int w, ValueRange r = ValueRange::raw_bytes)
      : channels(c), height(h), width(w), pixels(static_cast<std::size_t>(c) * h * w, 0.0f), range(r) {}

  float& at(int c, int y, int x) { return pixels[(static_cast<std::size_t>(c) * height + y) * width + x]; }
  float at(int c, int y, int x) const {
    return pixels[(static_cast<std::size_t>(c) * height + y) * width + x];
  }
  bool operator==(const Image&) const = default;
};

/// N,C,H,W block of same-sized images.
struct ImageBatch {
  int count = 0;
  int channels = 0;
  int height = 0;
  int width = 0;
  std::vector<float> pixels;
  ValueRange range = ValueRange::raw_bytes;

  std::size_t image_size() const { return static_cast<std::size_t>(channels) * height * width; }
  Image image(int index) const;
  void push_back(const Image& img);
};

struct RotationLabel {
  int y = 0;
  int K = 4;
};

enum class RotationMode { exact90, warp };
enum class Interpolation { nearest, bilinear };

struct RotationTaskSpec {
  int K = 4;
  std::vector<double> angles{0, 90, 180, 270};
  RotationMode mode = RotationMode::exact90;
  std::string name = "4";

  /// Throws std::invalid_argument when the invariants do not hold.
  void validate() const;

  static RotationTaskSpec four();
  static RotationTaskSpec eight();
  static RotationTaskSpec upright_flip();   // {0,180}, "2a"
  static RotationTaskSpec quarter_pair();   // {90,270}, "2b"
  /// "4", "8", "2a" or "2b".
  static RotationTaskSpec from_name(const std::string& name);
};

Image transpose(const Image& img);
Image flip_vertical(const Image& img);    // upside-down
Image flip_horizontal(const Image& img);  // left-right

/// Exact rotation by quarter_turns*90 degrees built from flips and
/// transposes: 90 = vflip(transpose), 180 = hflip(vflip), 270 =
/// transpose(vflip). quarter_turns is taken modulo 4. Square images only.
Image rot90_exact(const Image& img, int quarter_turns);

/// Rotation about the image centre followed by a central crop of side
/// floor(S/sqrt 2) and a resize back to S. The crop is the same for every
/// angle, so 90-degree multiples carry the same resampling artifacts as the
/// 45-degree family.
Image rotate_warp(const Image& img, double degrees, Interpolation interp = Interpolation::bilinear);

/// g(img | y) for the given task.
Image apply_g(const Image& img, RotationLabel label, const RotationTaskSpec& spec,
              Interpolation interp = Interpolation::bilinear);

struct SslBatch {
  ImageBatch images;
  std::vector<int> labels;
};

/// All K rotated copies of every image, image-major: output b*K + y holds
/// g(img_b | y).
SslBatch build_ssl_batch(const ImageBatch& imgs, const RotationTaskSpec& spec,
                         Interpolation interp = Interpolation::bilinear);

}  // namespace rotssl
