// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Layer-graph descriptions (ModelSpec), their parameters (ModelState), and
// the builders for NIN-style RotNets and the two probe classifiers.

#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "rotssl/ops.hpp"
#include "rotssl/tensor.hpp"

namespace rotssl {

struct ConvLayer {
  int in_channels = 0;
  int out_channels = 0;
  int kernel = 1;
  int stride = 1;
  int pad = 0;
};
struct BatchNormLayer {
  int channels = 0;
};
struct ReluLayer {};
struct MaxPoolLayer {
  int kernel = 3;
  int stride = 2;
  int pad = 1;
};
struct GlobalAvgPoolLayer {};
struct FlattenLayer {};
struct DenseLayer {
  int in_features = 0;
  int out_features = 0;
};

using LayerKind = std::variant<ConvLayer, BatchNormLayer, ReluLayer, MaxPoolLayer, GlobalAvgPoolLayer,
                               FlattenLayer, DenseLayer>;

struct LayerDesc {
  std::string name;
  LayerKind kind;
};

/// A named block-boundary activation: the output of layers [0, end).
struct FeatureTap {
  std::string name;
  std::size_t end = 0;
};

struct ModelSpec {
  std::vector<LayerDesc> layers;
  std::vector<FeatureTap> taps;
  int num_classes = 0;
  /// Expected C,H,W of one input; 0 marks an unconstrained extent.
  std::vector<int> input_shape;

  const FeatureTap& tap(const std::string& name) const;
  bool has_tap(const std::string& name) const;
};

template <typename T>
struct ModelState {
  std::map<std::string, Tensor<T>> parameters;
  std::map<std::string, BatchNormState<T>> norm_states;
  std::map<std::string, bool> trainable_mask;

  /// Updates the mask and the requires_grad flag of every parameter whose
  /// name starts with `prefix` (empty prefix = all).
  void set_trainable(const std::string& prefix, bool trainable);
  ModelState clone() const;
};

template <typename T>
struct Model {
  ModelSpec spec;
  ModelState<T> state;
};

class UnknownTapError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Fresh parameters: N(0, 2/fan_in) weights, zero biases, unit gamma, zero
/// beta, running stats (0, 1).
ModelState<float> init_state(const ModelSpec& spec, std::uint64_t seed);

/// NIN RotNet with 3 conv layers per block. `width` scales every channel
/// count (1.0 = 192/160/96 plan).
Model<float> build_rotnet(int num_blocks, int num_classes, std::uint64_t seed = 0, double width = 1.0);

/// flatten -> dense(hidden)+BN+relu -> dense(hidden)+BN+relu -> dense(classes)
Model<float> build_probe_nonlinear(const std::vector<int>& feature_shape, int num_classes,
                                   std::uint64_t seed = 0, int hidden = 200);

/// NIN block-3 topology on a C,H,W feature map, then global average pool and
/// a linear classifier. Layer names match build_rotnet's third block.
Model<float> build_probe_conv(const std::vector<int>& feature_shape, int num_classes,
                              std::uint64_t seed = 0, double width = 1.0);

/// Layers up to and including the named tap.
ModelSpec truncate(const ModelSpec& spec, const std::string& tap);
/// Concatenation; names must stay unique.
ModelSpec compose(const ModelSpec& first, const ModelSpec& second);
/// Parameters/norm states of `from` restricted to the layers of `spec`.
template <typename T>
ModelState<T> restrict_state(const ModelState<T>& from, const ModelSpec& spec);
template <typename T>
ModelState<T> merge_states(const ModelState<T>& a, const ModelState<T>& b);

/// Swaps the final dense layer for a fresh `num_classes`-way one; every
/// other parameter value is kept.
Model<float> replace_head(const Model<float>& model, int num_classes, std::uint64_t seed);

/// Output shape (without batch axis) of layers [0, end) for a C,H,W input.
std::vector<int> infer_shape(const ModelSpec& spec, const std::vector<int>& input_chw, std::size_t end);
std::vector<int> tap_shape(const ModelSpec& spec, const std::string& tap, const std::vector<int>& input_chw);

std::size_t parameter_count(const ModelSpec& spec);

/// Parameters in layer order, filtered by the trainable mask when asked.
template <typename T>
std::vector<Tensor<T>> parameter_list(const ModelSpec& spec, const ModelState<T>& state,
                                      bool trainable_only);

/// Runs layers [begin, end). BatchNorm follows `mode`.
template <typename T>
Tensor<T> forward_range(const ModelSpec& spec, ModelState<T>& state, const Tensor<T>& input, Mode mode,
                        std::size_t begin, std::size_t end);

template <typename T>
Tensor<T> forward(const ModelSpec& spec, ModelState<T>& state, const Tensor<T>& input, Mode mode);

/// Block-boundary activation. Eval mode never touches running statistics.
template <typename T>
Tensor<T> forward_features(const ModelSpec& spec, ModelState<T>& state, const Tensor<T>& input,
                           const std::string& tap, Mode mode = Mode::eval);

/// Canonical line-based description; the fingerprint hashes it.
std::string spec_to_text(const ModelSpec& spec);
ModelSpec spec_from_text(const std::string& text);
std::uint64_t spec_fingerprint(const ModelSpec& spec);

template <typename To, typename From>
ModelState<To> cast_state(const ModelState<From>& state);

}  // namespace rotssl
