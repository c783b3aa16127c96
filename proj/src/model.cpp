// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/model.hpp"

#include <cmath>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

namespace rotssl {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};

int scaled(int channels, double width) {
  return std::max(1, static_cast<int>(std::lround(channels * width)));
}

void add_conv_unit(ModelSpec& spec, const std::string& block, int index, int in, int out, int kernel) {
  const auto suffix = std::to_string(index);
  spec.layers.push_back({block + ".conv" + suffix, ConvLayer{in, out, kernel, 1, kernel / 2}});
  spec.layers.push_back({block + ".bn" + suffix, BatchNormLayer{out}});
  spec.layers.push_back({block + ".relu" + suffix, ReluLayer{}});
}

/// Appends one NIN block; returns its output channel count.
int add_nin_block(ModelSpec& spec, int block, int in_channels, double width) {
  const std::string name = "block" + std::to_string(block);
  const int wide = scaled(192, width);
  int out = wide;
  if (block == 1) {
    const int mid = scaled(160, width);
    out = scaled(96, width);
    add_conv_unit(spec, name, 1, in_channels, wide, 5);
    add_conv_unit(spec, name, 2, wide, mid, 1);
    add_conv_unit(spec, name, 3, mid, out, 1);
  } else {
    add_conv_unit(spec, name, 1, in_channels, wide, block == 2 ? 5 : 3);
    add_conv_unit(spec, name, 2, wide, wide, 1);
    add_conv_unit(spec, name, 3, wide, wide, 1);
  }
  if (block <= 2) spec.layers.push_back({name + ".pool", MaxPoolLayer{3, 2, 1}});
  spec.taps.push_back({"ConvB" + std::to_string(block), spec.layers.size()});
  return out;
}

void add_linear_head(ModelSpec& spec, int channels, int num_classes) {
  spec.layers.push_back({"head.gap", GlobalAvgPoolLayer{}});
  spec.layers.push_back({"head.fc", DenseLayer{channels, num_classes}});
  spec.num_classes = num_classes;
}

template <typename T>
Tensor<T> param(const ModelState<T>& state, const std::string& name) {
  auto it = state.parameters.find(name);
  if (it == state.parameters.end()) throw std::invalid_argument("model state lacks parameter '" + name + "'");
  return it->second;
}

std::vector<std::string> param_names(const LayerDesc& layer) {
  return std::visit(overloaded{
                        [&](const ConvLayer&) { return std::vector<std::string>{layer.name + ".weight", layer.name + ".bias"}; },
                        [&](const DenseLayer&) { return std::vector<std::string>{layer.name + ".weight", layer.name + ".bias"}; },
                        [&](const BatchNormLayer&) { return std::vector<std::string>{layer.name + ".gamma", layer.name + ".beta"}; },
                        [](const auto&) { return std::vector<std::string>{}; },
                    },
                    layer.kind);
}

// The dense layer producing the logits starts at a tenth of the He scale so
// that fresh models predict close to uniformly.
constexpr double kLogitInitScale = 0.1;

void init_layer(const LayerDesc& layer, ModelState<float>& state, std::mt19937_64& rng, bool logits = false) {
  auto he_normal = [&](Shape shape, std::int64_t fan_in) {
    const double scale = logits ? kLogitInitScale : 1.0;
    std::normal_distribution<double> dist(0.0, scale * std::sqrt(2.0 / static_cast<double>(fan_in)));
    Tensor<float> t(std::move(shape), 0.0f, true);
    for (auto& v : t.data()) v = static_cast<float>(dist(rng));
    return t;
  };
  std::visit(overloaded{
                 [&](const ConvLayer& c) {
                   state.parameters[layer.name + ".weight"] =
                       he_normal({c.out_channels, c.in_channels, c.kernel, c.kernel},
                                 static_cast<std::int64_t>(c.in_channels) * c.kernel * c.kernel);
                   state.parameters[layer.name + ".bias"] = Tensor<float>({c.out_channels}, 0.0f, true);
                 },
                 [&](const DenseLayer& d) {
                   state.parameters[layer.name + ".weight"] = he_normal({d.in_features, d.out_features}, d.in_features);
                   state.parameters[layer.name + ".bias"] = Tensor<float>({d.out_features}, 0.0f, true);
                 },
                 [&](const BatchNormLayer& b) {
                   state.parameters[layer.name + ".gamma"] = Tensor<float>({b.channels}, 1.0f, true);
                   state.parameters[layer.name + ".beta"] = Tensor<float>({b.channels}, 0.0f, true);
                   state.norm_states.insert_or_assign(layer.name, BatchNormState<float>(static_cast<std::size_t>(b.channels)));
                 },
                 [](const auto&) {},
             },
             layer.kind);
  for (const auto& name : param_names(layer)) state.trainable_mask[name] = true;
}

}  // namespace

const FeatureTap& ModelSpec::tap(const std::string& name) const {
  for (const auto& t : taps) {
    if (t.name == name) return t;
  }
  throw UnknownTapError("unknown feature tap '" + name + "'");
}

bool ModelSpec::has_tap(const std::string& name) const {
  for (const auto& t : taps) {
    if (t.name == name) return true;
  }
  return false;
}

template <typename T>
void ModelState<T>::set_trainable(const std::string& prefix, bool trainable) {
  for (auto& [name, tensor] : parameters) {
    if (name.compare(0, prefix.size(), prefix) != 0) continue;
    trainable_mask[name] = trainable;
    tensor.set_requires_grad(trainable);
  }
}

template <typename T>
ModelState<T> ModelState<T>::clone() const {
  ModelState out;
  for (const auto& [name, tensor] : parameters) out.parameters.emplace(name, tensor.clone());
  out.norm_states = norm_states;
  out.trainable_mask = trainable_mask;
  return out;
}

ModelState<float> init_state(const ModelSpec& spec, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  ModelState<float> state;
  for (std::size_t i = 0; i < spec.layers.size(); ++i) {
    init_layer(spec.layers[i], state, rng, i + 1 == spec.layers.size());
  }
  return state;
}

Model<float> build_rotnet(int num_blocks, int num_classes, std::uint64_t seed, double width) {
  if (num_blocks < 1 || num_blocks > 5) {
    throw std::invalid_argument("build_rotnet: unsupported num_blocks " + std::to_string(num_blocks) +
                                " (expected 3, 4 or 5; 1-2 allowed for desk-scale runs)");
  }
  if (num_classes < 1) throw std::invalid_argument("build_rotnet: num_classes must be positive");
  if (!(width > 0.0)) throw std::invalid_argument("build_rotnet: width must be positive");
  ModelSpec spec;
  spec.input_shape = {3, 0, 0};
  int channels = 3;
  for (int b = 1; b <= num_blocks; ++b) channels = add_nin_block(spec, b, channels, width);
  add_linear_head(spec, channels, num_classes);
  auto state = init_state(spec, seed);
  return {std::move(spec), std::move(state)};
}

Model<float> build_probe_nonlinear(const std::vector<int>& feature_shape, int num_classes, std::uint64_t seed,
                                   int hidden) {
  if (feature_shape.empty()) throw ShapeError("build_probe_nonlinear: empty feature shape");
  int flat = 1;
  for (int d : feature_shape) {
    if (d <= 0) throw ShapeError("build_probe_nonlinear: feature extents must be positive");
    flat *= d;
  }
  ModelSpec spec;
  spec.input_shape = feature_shape;
  spec.layers.push_back({"probe.flatten", FlattenLayer{}});
  spec.layers.push_back({"probe.fc1", DenseLayer{flat, hidden}});
  spec.layers.push_back({"probe.bn1", BatchNormLayer{hidden}});
  spec.layers.push_back({"probe.relu1", ReluLayer{}});
  spec.layers.push_back({"probe.fc2", DenseLayer{hidden, hidden}});
  spec.layers.push_back({"probe.bn2", BatchNormLayer{hidden}});
  spec.layers.push_back({"probe.relu2", ReluLayer{}});
  spec.layers.push_back({"probe.fc3", DenseLayer{hidden, num_classes}});
  spec.num_classes = num_classes;
  auto state = init_state(spec, seed);
  return {std::move(spec), std::move(state)};
}

Model<float> build_probe_conv(const std::vector<int>& feature_shape, int num_classes, std::uint64_t seed,
                              double width) {
  if (feature_shape.size() != 3) throw ShapeError("build_probe_conv: feature shape must be C,H,W");
  if (feature_shape[0] <= 0 || feature_shape[1] <= 0 || feature_shape[1] != feature_shape[2]) {
    throw ShapeError("build_probe_conv: incompatible feature shape, expected a square C,H,W map");
  }
  ModelSpec spec;
  spec.input_shape = feature_shape;
  const int channels = add_nin_block(spec, 3, feature_shape[0], width);
  add_linear_head(spec, channels, num_classes);
  auto state = init_state(spec, seed);
  return {std::move(spec), std::move(state)};
}

ModelSpec truncate(const ModelSpec& spec, const std::string& tap_name) {
  const auto& t = spec.tap(tap_name);
  ModelSpec out;
  out.input_shape = spec.input_shape;
  out.layers.assign(spec.layers.begin(), spec.layers.begin() + static_cast<std::ptrdiff_t>(t.end));
  for (const auto& other : spec.taps) {
    if (other.end <= t.end) out.taps.push_back(other);
  }
  out.num_classes = 0;
  return out;
}

ModelSpec compose(const ModelSpec& first, const ModelSpec& second) {
  ModelSpec out = first;
  std::set<std::string> names;
  for (const auto& l : first.layers) names.insert(l.name);
  for (const auto& l : second.layers) {
    if (!names.insert(l.name).second) throw std::invalid_argument("compose: duplicate layer name '" + l.name + "'");
    out.layers.push_back(l);
  }
  for (const auto& t : second.taps) out.taps.push_back({t.name, t.end + first.layers.size()});
  out.num_classes = second.num_classes;
  return out;
}

template <typename T>
ModelState<T> restrict_state(const ModelState<T>& from, const ModelSpec& spec) {
  ModelState<T> out;
  for (const auto& layer : spec.layers) {
    for (const auto& name : param_names(layer)) {
      out.parameters.emplace(name, param(from, name).clone());
      auto it = from.trainable_mask.find(name);
      out.trainable_mask[name] = it == from.trainable_mask.end() ? true : it->second;
    }
    if (std::holds_alternative<BatchNormLayer>(layer.kind)) {
      auto it = from.norm_states.find(layer.name);
      if (it == from.norm_states.end()) throw std::invalid_argument("model state lacks norm state '" + layer.name + "'");
      out.norm_states.insert_or_assign(layer.name, it->second);
    }
  }
  return out;
}

template <typename T>
ModelState<T> merge_states(const ModelState<T>& a, const ModelState<T>& b) {
  ModelState<T> out = a.clone();
  const auto extra = b.clone();
  for (const auto& [name, tensor] : extra.parameters) {
    if (!out.parameters.emplace(name, tensor).second) throw std::invalid_argument("merge_states: duplicate '" + name + "'");
  }
  for (const auto& [name, ns] : extra.norm_states) out.norm_states.insert_or_assign(name, ns);
  for (const auto& [name, flag] : extra.trainable_mask) out.trainable_mask[name] = flag;
  return out;
}

Model<float> replace_head(const Model<float>& model, int num_classes, std::uint64_t seed) {
  std::size_t last_dense = model.spec.layers.size();
  for (std::size_t i = 0; i < model.spec.layers.size(); ++i) {
    if (std::holds_alternative<DenseLayer>(model.spec.layers[i].kind)) last_dense = i;
  }
  if (last_dense == model.spec.layers.size()) throw std::invalid_argument("replace_head: model has no dense layer");
  Model<float> out{model.spec, model.state.clone()};
  auto& layer = out.spec.layers[last_dense];
  std::get<DenseLayer>(layer.kind).out_features = num_classes;
  out.spec.num_classes = num_classes;
  std::mt19937_64 rng(seed);
  ModelState<float> fresh;
  init_layer(layer, fresh, rng, last_dense + 1 == out.spec.layers.size());
  for (auto& [name, tensor] : fresh.parameters) {
    out.state.parameters.insert_or_assign(name, tensor);
    out.state.trainable_mask[name] = true;
  }
  return out;
}

std::vector<int> infer_shape(const ModelSpec& spec, const std::vector<int>& input_chw, std::size_t end) {
  if (end > spec.layers.size()) throw std::out_of_range("infer_shape: end beyond layer count");
  std::vector<int> s = input_chw;
  for (std::size_t i = 0; i < end; ++i) {
    const auto& layer = spec.layers[i];
    std::visit(overloaded{
                   [&](const ConvLayer& c) {
                     if (s.size() != 3 || s[0] != c.in_channels) {
                       throw ShapeError(layer.name + ": expected " + std::to_string(c.in_channels) + " input channels");
                     }
                     s = {c.out_channels, (s[1] + 2 * c.pad - c.kernel) / c.stride + 1,
                          (s[2] + 2 * c.pad - c.kernel) / c.stride + 1};
                   },
                   [&](const MaxPoolLayer& p) {
                     s = {s[0], (s[1] + 2 * p.pad - p.kernel) / p.stride + 1, (s[2] + 2 * p.pad - p.kernel) / p.stride + 1};
                   },
                   [&](const GlobalAvgPoolLayer&) { s = {s[0]}; },
                   [&](const FlattenLayer&) {
                     int n = 1;
                     for (int d : s) n *= d;
                     s = {n};
                   },
                   [&](const DenseLayer& d) {
                     if (s.size() != 1 || s[0] != d.in_features) {
                       throw ShapeError(layer.name + ": expected " + std::to_string(d.in_features) + " input features");
                     }
                     s = {d.out_features};
                   },
                   [](const auto&) {},
               },
               layer.kind);
  }
  return s;
}

std::vector<int> tap_shape(const ModelSpec& spec, const std::string& tap, const std::vector<int>& input_chw) {
  return infer_shape(spec, input_chw, spec.tap(tap).end);
}

std::size_t parameter_count(const ModelSpec& spec) {
  std::size_t total = 0;
  for (const auto& layer : spec.layers) {
    std::visit(overloaded{
                   [&](const ConvLayer& c) {
                     total += static_cast<std::size_t>(c.out_channels) * c.in_channels * c.kernel * c.kernel + c.out_channels;
                   },
                   [&](const DenseLayer& d) { total += static_cast<std::size_t>(d.in_features) * d.out_features + d.out_features; },
                   [&](const BatchNormLayer& b) { total += 2 * static_cast<std::size_t>(b.channels); },
                   [](const auto&) {},
               },
               layer.kind);
  }
  return total;
}

template <typename T>
std::vector<Tensor<T>> parameter_list(const ModelSpec& spec, const ModelState<T>& state, bool trainable_only) {
  std::vector<Tensor<T>> out;
  for (const auto& layer : spec.layers) {
    for (const auto& name : param_names(layer)) {
      if (trainable_only) {
        auto it = state.trainable_mask.find(name);
        if (it != state.trainable_mask.end() && !it->second) continue;
      }
      out.push_back(param(state, name));
    }
  }
  return out;
}

template <typename T>
Tensor<T> forward_range(const ModelSpec& spec, ModelState<T>& state, const Tensor<T>& input, Mode mode,
                        std::size_t begin, std::size_t end) {
  if (begin > end || end > spec.layers.size()) throw std::out_of_range("forward_range: bad layer range");
  if (begin == 0 && !spec.input_shape.empty()) {
    if (input.rank() != spec.input_shape.size() + 1) {
      throw ShapeError("forward: input shape " + shape_str(input.shape()) + " has wrong rank for model");
    }
    for (std::size_t i = 0; i < spec.input_shape.size(); ++i) {
      if (spec.input_shape[i] != 0 && input.dim(i + 1) != spec.input_shape[i]) {
        throw ShapeError("forward: input dim " + std::to_string(i + 1) + " is " + std::to_string(input.dim(i + 1)) +
                         ", model expects " + std::to_string(spec.input_shape[i]));
      }
    }
  }
  Tensor<T> x = input;
  for (std::size_t i = begin; i < end; ++i) {
    const auto& layer = spec.layers[i];
    x = std::visit(overloaded{
                       [&](const ConvLayer& c) {
                         return conv2d(x, param(state, layer.name + ".weight"), param(state, layer.name + ".bias"),
                                       c.stride, c.pad);
                       },
                       [&](const BatchNormLayer&) {
                         auto it = state.norm_states.find(layer.name);
                         if (it == state.norm_states.end()) {
                           throw std::invalid_argument("model state lacks norm state '" + layer.name + "'");
                         }
                         return batch_norm(x, param(state, layer.name + ".gamma"), param(state, layer.name + ".beta"),
                                           it->second, mode);
                       },
                       [&](const ReluLayer&) { return relu(x); },
                       [&](const MaxPoolLayer& p) { return max_pool2d(x, p.kernel, p.stride, p.pad); },
                       [&](const GlobalAvgPoolLayer&) { return global_avg_pool(x); },
                       [&](const FlattenLayer&) { return flatten(x); },
                       [&](const DenseLayer&) {
                         return dense(x, param(state, layer.name + ".weight"), param(state, layer.name + ".bias"));
                       },
                   },
                   layer.kind);
  }
  return x;
}

template <typename T>
Tensor<T> forward(const ModelSpec& spec, ModelState<T>& state, const Tensor<T>& input, Mode mode) {
  return forward_range(spec, state, input, mode, 0, spec.layers.size());
}

template <typename T>
Tensor<T> forward_features(const ModelSpec& spec, ModelState<T>& state, const Tensor<T>& input,
                           const std::string& tap, Mode mode) {
  return forward_range(spec, state, input, mode, 0, spec.tap(tap).end);
}

std::string spec_to_text(const ModelSpec& spec) {
  std::ostringstream os;
  os << "classes " << spec.num_classes << '\n';
  os << "input";
  for (int d : spec.input_shape) os << ' ' << d;
  os << '\n';
  for (const auto& layer : spec.layers) {
    os << "layer " << layer.name << ' ';
    std::visit(overloaded{
                   [&](const ConvLayer& c) {
                     os << "conv " << c.in_channels << ' ' << c.out_channels << ' ' << c.kernel << ' ' << c.stride << ' '
                        << c.pad;
                   },
                   [&](const BatchNormLayer& b) { os << "bn " << b.channels; },
                   [&](const ReluLayer&) { os << "relu"; },
                   [&](const MaxPoolLayer& p) { os << "maxpool " << p.kernel << ' ' << p.stride << ' ' << p.pad; },
                   [&](const GlobalAvgPoolLayer&) { os << "gap"; },
                   [&](const FlattenLayer&) { os << "flatten"; },
                   [&](const DenseLayer& d) { os << "dense " << d.in_features << ' ' << d.out_features; },
               },
               layer.kind);
    os << '\n';
  }
  for (const auto& t : spec.taps) os << "tap " << t.name << ' ' << t.end << '\n';
  return os.str();
}

ModelSpec spec_from_text(const std::string& text) {
  ModelSpec spec;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "classes") {
      ls >> spec.num_classes;
    } else if (kw == "input") {
      int d;
      while (ls >> d) spec.input_shape.push_back(d);
      if (!ls.eof()) throw std::invalid_argument("spec_from_text: malformed line '" + line + "'");
      continue;
    } else if (kw == "tap") {
      FeatureTap t;
      ls >> t.name >> t.end;
      spec.taps.push_back(t);
    } else if (kw == "layer") {
      LayerDesc layer;
      std::string type;
      ls >> layer.name >> type;
      if (type == "conv") {
        ConvLayer c;
        ls >> c.in_channels >> c.out_channels >> c.kernel >> c.stride >> c.pad;
        layer.kind = c;
      } else if (type == "bn") {
        BatchNormLayer b;
        ls >> b.channels;
        layer.kind = b;
      } else if (type == "relu") {
        layer.kind = ReluLayer{};
      } else if (type == "maxpool") {
        MaxPoolLayer p;
        ls >> p.kernel >> p.stride >> p.pad;
        layer.kind = p;
      } else if (type == "gap") {
        layer.kind = GlobalAvgPoolLayer{};
      } else if (type == "flatten") {
        layer.kind = FlattenLayer{};
      } else if (type == "dense") {
        DenseLayer d;
        ls >> d.in_features >> d.out_features;
        layer.kind = d;
      } else {
        throw std::invalid_argument("spec_from_text: unknown layer type '" + type + "'");
      }
      if (ls.fail()) throw std::invalid_argument("spec_from_text: malformed line '" + line + "'");
      spec.layers.push_back(std::move(layer));
    } else {
      throw std::invalid_argument("spec_from_text: unknown record '" + kw + "'");
    }
    if (ls.fail()) throw std::invalid_argument("spec_from_text: malformed line '" + line + "'");
  }
  return spec;
}

std::uint64_t spec_fingerprint(const ModelSpec& spec) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : spec_to_text(spec)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  return h;
}

template <typename To, typename From>
ModelState<To> cast_state(const ModelState<From>& state) {
  ModelState<To> out;
  for (const auto& [name, tensor] : state.parameters) {
    std::vector<To> values(tensor.data().begin(), tensor.data().end());
    out.parameters.emplace(name, Tensor<To>(tensor.shape(), std::move(values), tensor.requires_grad()));
  }
  for (const auto& [name, ns] : state.norm_states) {
    BatchNormState<To> cast;
    cast.running_mean.assign(ns.running_mean.begin(), ns.running_mean.end());
    cast.running_var.assign(ns.running_var.begin(), ns.running_var.end());
    cast.momentum = static_cast<To>(ns.momentum);
    cast.epsilon = static_cast<To>(ns.epsilon);
    out.norm_states.insert_or_assign(name, cast);
  }
  out.trainable_mask = state.trainable_mask;
  return out;
}

template struct ModelState<float>;
template struct ModelState<double>;
template ModelState<float> restrict_state(const ModelState<float>&, const ModelSpec&);
template ModelState<float> merge_states(const ModelState<float>&, const ModelState<float>&);
template std::vector<Tensor<float>> parameter_list(const ModelSpec&, const ModelState<float>&, bool);
template std::vector<Tensor<double>> parameter_list(const ModelSpec&, const ModelState<double>&, bool);
template Tensor<float> forward_range(const ModelSpec&, ModelState<float>&, const Tensor<float>&, Mode, std::size_t,
                                     std::size_t);
template Tensor<double> forward_range(const ModelSpec&, ModelState<double>&, const Tensor<double>&, Mode,
                                      std::size_t, std::size_t);
template Tensor<float> forward(const ModelSpec&, ModelState<float>&, const Tensor<float>&, Mode);
template Tensor<double> forward(const ModelSpec&, ModelState<double>&, const Tensor<double>&, Mode);
template Tensor<float> forward_features(const ModelSpec&, ModelState<float>&, const Tensor<float>&,
                                        const std::string&, Mode);
template Tensor<double> forward_features(const ModelSpec&, ModelState<double>&, const Tensor<double>&,
                                         const std::string&, Mode);
template ModelState<double> cast_state<double, float>(const ModelState<float>&);
template ModelState<float> cast_state<float, double>(const ModelState<double>&);

}  // namespace rotssl
