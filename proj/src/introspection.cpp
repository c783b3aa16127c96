// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/introspection.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace rotssl {

namespace {

bool is_integer(double p) { return std::floor(p) == p; }

}  // namespace

AttentionMap attention_map(const Tensor<float>& features, double p, const std::string& tap) {
  if (!(p > 0)) throw std::invalid_argument("attention_map: power p must be positive");
  Shape s = features.shape();
  if (s.size() == 4) {
    if (s[0] != 1) throw ShapeError("attention_map: expected one image, got batch of " + std::to_string(s[0]));
    s.erase(s.begin());
  }
  if (s.size() != 3) throw ShapeError("attention_map: expected C,H,W features, got " + shape_str(features.shape()));
  const auto C = s[0], H = s[1], W = s[2];
  const auto plane = static_cast<std::size_t>(H * W);
  const auto data = features.data();
  if (!is_integer(p)) {
    for (float v : data) {
      if (v < 0) throw std::invalid_argument("attention_map: negative activation with non-integer power");
    }
  }
  AttentionMap m;
  m.height = static_cast<int>(H);
  m.width = static_cast<int>(W);
  m.tap = tap;
  m.p = p;
  m.values.resize(plane);
  std::vector<double> terms(static_cast<std::size_t>(C));
  for (std::size_t i = 0; i < plane; ++i) {
    for (std::int64_t c = 0; c < C; ++c) terms[c] = std::pow(static_cast<double>(data[c * plane + i]), p);
    std::sort(terms.begin(), terms.end());
    double sum = 0;
    for (double t : terms) sum += t;
    m.values[i] = std::max(sum, 0.0);
  }
  const double peak = *std::max_element(m.values.begin(), m.values.end());
  if (peak > 0) {
    for (auto& v : m.values) v /= peak;
  }
  return m;
}

double default_attention_power(const std::string& tap) {
  if (tap == "ConvB1") return 1;
  if (tap == "ConvB2") return 2;
  return 4;
}

AttentionMap rotate_map(const AttentionMap& map, int quarter_turns) {
  if (map.height != map.width) throw std::invalid_argument("rotate_map: map must be square");
  // Rotate an index raster to reuse the exact rot90 permutation.
  Image index(1, map.height, map.width);
  std::iota(index.pixels.begin(), index.pixels.end(), 0.0f);
  const auto moved = rot90_exact(index, quarter_turns);
  AttentionMap out = map;
  for (std::size_t i = 0; i < out.values.size(); ++i) {
    out.values[i] = map.values[static_cast<std::size_t>(moved.pixels[i])];
  }
  return out;
}

std::optional<double> map_correlation(const AttentionMap& a, const AttentionMap& b) {
  if (a.values.size() != b.values.size()) throw std::invalid_argument("map_correlation: map sizes differ");
  const auto n = static_cast<double>(a.values.size());
  const double ma = std::accumulate(a.values.begin(), a.values.end(), 0.0) / n;
  const double mb = std::accumulate(b.values.begin(), b.values.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    const double da = a.values[i] - ma, db = b.values[i] - mb;
    sab += da * db;
    saa += da * da;
    sbb += db * db;
  }
  if (saa == 0 || sbb == 0) return std::nullopt;
  return sab / std::sqrt(saa * sbb);
}

std::vector<TapRotationReport> attention_rotation_report(const FeatureExtractor& extractor, const Image& image,
                                                         const std::vector<std::string>& taps,
                                                         const std::vector<double>& powers) {
  if (image.height != image.width) throw std::invalid_argument("attention_rotation_report: image must be square");
  if (!powers.empty() && powers.size() != taps.size()) {
    throw std::invalid_argument("attention_rotation_report: one power per tap expected");
  }
  std::vector<Image> copies;
  for (int y = 0; y < 4; ++y) copies.push_back(rot90_exact(image, y));
  std::vector<TapRotationReport> out;
  for (std::size_t t = 0; t < taps.size(); ++t) {
    TapRotationReport rep;
    rep.tap = taps[t];
    rep.p = powers.empty() ? default_attention_power(taps[t]) : powers[t];
    for (int y = 0; y < 4; ++y) {
      rep.maps.push_back(attention_map(extractor(copies[y], taps[t]), rep.p, taps[t]));
      rep.aligned.push_back(rotate_map(rep.maps.back(), 4 - y));
    }
    for (int y = 0; y < 4; ++y) rep.correlation.push_back(map_correlation(rep.aligned[y], rep.aligned[0]));
    out.push_back(std::move(rep));
  }
  return out;
}

std::vector<TapRotationReport> attention_rotation_report(const ModelSpec& spec, ModelState<float>& state,
                                                         const Image& raw_image, const Normalization& norm,
                                                         const std::vector<std::string>& taps,
                                                         const std::vector<double>& powers) {
  auto extractor = [&](const Image& img, const std::string& tap) {
    ImageBatch batch;
    batch.push_back(img);
    normalize_in_place(batch, norm);
    NoGradGuard guard;
    return forward_features(spec, state, to_tensor(batch), tap, Mode::eval);
  };
  return attention_rotation_report(extractor, raw_image, taps, powers);
}

Image map_to_image(const AttentionMap& map, int scale) {
  if (scale < 1) throw std::invalid_argument("map_to_image: scale must be >= 1");
  Image img(1, map.height * scale, map.width * scale, ValueRange::normalized);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) img.at(0, y, x) = static_cast<float>(map.at(y / scale, x / scale));
  }
  return img;
}

Image filter_grid(const ModelState<float>& state, const std::string& layer) {
  const auto it = state.parameters.find(layer + ".weight");
  if (it == state.parameters.end()) throw std::invalid_argument("filter_grid: no conv weight for layer '" + layer + "'");
  const auto& w = it->second;
  if (w.rank() != 4) throw ShapeError("filter_grid: '" + layer + "' is not a conv layer");
  if (w.dim(1) != 3) {
    throw ShapeError("filter_grid: first layer has " + std::to_string(w.dim(1)) + " input channels, expected 3");
  }
  const int F = static_cast<int>(w.dim(0));
  const int kh = static_cast<int>(w.dim(2)), kw = static_cast<int>(w.dim(3));
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(F))));
  const int rows = (F + cols - 1) / cols;
  Image img(3, rows * (kh + 1) + 1, cols * (kw + 1) + 1, ValueRange::normalized);
  const std::size_t per_filter = static_cast<std::size_t>(3) * kh * kw;
  const auto data = w.data();
  for (int f = 0; f < F; ++f) {
    const float* src = data.data() + f * per_filter;
    const auto [lo, hi] = std::minmax_element(src, src + per_filter);
    const float range = *hi - *lo;
    const int oy = 1 + (f / cols) * (kh + 1);
    const int ox = 1 + (f % cols) * (kw + 1);
    for (int c = 0; c < 3; ++c) {
      for (int y = 0; y < kh; ++y) {
        for (int x = 0; x < kw; ++x) {
          const float v = src[(c * kh + y) * kw + x];
          img.at(c, oy + y, ox + x) = range > 0 ? (v - *lo) / range : 0.5f;
        }
      }
    }
  }
  return img;
}

std::vector<std::uint8_t> encode_ppm(const Image& image) {
  if (image.channels != 1 && image.channels != 3) throw std::invalid_argument("ppm: 1 or 3 channels required");
  const std::string header =
      "P6\n" + std::to_string(image.width) + " " + std::to_string(image.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  const float scale = image.range == ValueRange::normalized ? 255.0f : 1.0f;
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < 3; ++c) {
        const float v = image.at(image.channels == 1 ? 0 : c, y, x) * scale;
        out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0f, 255.0f))));
      }
    }
  }
  return out;
}

void write_ppm(const std::filesystem::path& path, const Image& image) { write_file_atomic(path, encode_ppm(image)); }

Image read_ppm(const std::filesystem::path& path) {
  const auto bytes = read_file(path);
  std::size_t pos = 0;
  auto token = [&]() {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    std::string t;
    while (pos < bytes.size() && !std::isspace(bytes[pos])) t += static_cast<char>(bytes[pos++]);
    if (t.empty()) throw ParseError("ppm: truncated header in " + path.string(), pos);
    return t;
  };
  if (token() != "P6") throw ParseError("ppm: not a P6 file: " + path.string(), 0);
  const int w = std::stoi(token()), h = std::stoi(token()), maxval = std::stoi(token());
  if (w <= 0 || h <= 0 || maxval != 255) throw ParseError("ppm: unsupported dimensions or maxval", pos);
  ++pos;  // single whitespace before the raster
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() - pos != need) {
    throw ParseError("ppm: raster has " + std::to_string(bytes.size() - pos) + " bytes, expected " +
                         std::to_string(need),
                     pos);
  }
  Image img(3, h, w);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < w; ++x) {
      for (int c = 0; c < 3; ++c) img.at(c, y, x) = bytes[pos++];
    }
  }
  return img;
}

}  // namespace rotssl
