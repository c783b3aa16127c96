// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Attention maps over feature taps, the rotated-copies attention report and
// first-layer filter mosaics.

#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rotssl/dataset.hpp"
#include "rotssl/model.hpp"
#include "rotssl/rotations.hpp"

namespace rotssl {

struct AttentionMap {
  int height = 0;
  int width = 0;
  std::vector<double> values;  // row-major, in [0,1]
  std::string tap;
  double p = 1;

  double at(int y, int x) const { return values[static_cast<std::size_t>(y) * width + x]; }
};

/// A[h,w] = sum_c F[c,h,w]^p divided by its maximum. `features` is C,H,W or
/// 1,C,H,W. Channel terms are summed in sorted order, so the result does not
/// depend on channel order. Negative activations with a non-integer p are
/// rejected; negative sums (odd p) are clamped to zero.
AttentionMap attention_map(const Tensor<float>& features, double p, const std::string& tap = {});

/// 1 for ConvB1, 2 for ConvB2, 4 for deeper taps.
double default_attention_power(const std::string& tap);

/// Rotates a square map by quarter turns with the rot90_exact permutation.
AttentionMap rotate_map(const AttentionMap& map, int quarter_turns);

/// Pearson correlation; nullopt when either map is constant.
std::optional<double> map_correlation(const AttentionMap& a, const AttentionMap& b);

struct TapRotationReport {
  std::string tap;
  double p = 1;
  std::vector<AttentionMap> maps;     // map of rotated copy y, as computed
  std::vector<AttentionMap> aligned;  // rotated back by -y
  std::vector<std::optional<double>> correlation;  // aligned[y] vs aligned[0]
};

/// C,H,W features of one (already rotated) image at a tap.
using FeatureExtractor = std::function<Tensor<float>(const Image& image, const std::string& tap)>;

std::vector<TapRotationReport> attention_rotation_report(const FeatureExtractor& extractor, const Image& image,
                                                         const std::vector<std::string>& taps,
                                                         const std::vector<double>& powers);

/// Eval-mode taps of a model; rotation happens before normalization.
std::vector<TapRotationReport> attention_rotation_report(const ModelSpec& spec, ModelState<float>& state,
                                                         const Image& raw_image, const Normalization& norm,
                                                         const std::vector<std::string>& taps,
                                                         const std::vector<double>& powers);

/// 1-channel image of a map; values kept in [0,1], each cell scaled up by
/// `scale` pixels.
Image map_to_image(const AttentionMap& map, int scale = 1);

/// Filters of a 3-input-channel conv as a grid of ceil(sqrt(F)) columns with
/// 1-pixel separators; each filter min-max normalised on its own (a constant
/// filter becomes 0.5). Side = tiles*(k+1)+1. Values in [0,1].
Image filter_grid(const ModelState<float>& state, const std::string& layer = "block1.conv1");

/// Binary P6 pixmap, maxval 255. 1-channel images are written as gray RGB.
/// Values are taken as [0,1] for normalized images and [0,255] for raw ones.
void write_ppm(const std::filesystem::path& path, const Image& image);
std::vector<std::uint8_t> encode_ppm(const Image& image);
/// Reads back a P6 file as a raw-range 3-channel image.
Image read_ppm(const std::filesystem::path& path);

}  // namespace rotssl
