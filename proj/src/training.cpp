// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "rotssl/optim.hpp"

namespace rotssl {

namespace {

// Keeps the shuffling stream independent of other uses of the seed.
constexpr std::uint64_t kShuffleSalt = 0x5eed5eedULL;

std::string join_ints(const std::vector<int>& v) {
  std::string out;
  for (std::size_t i = 0; i < v.size(); ++i) out += (i ? "," : "") + std::to_string(v[i]);
  return out;
}

std::vector<int> split_ints(const std::string& text) {
  std::vector<int> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(std::stoi(item));
  }
  return out;
}

std::string rng_text(const std::mt19937_64& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

int count_correct(std::span<const float> logits, int classes, std::span<const int> labels) {
  int correct = 0;
  for (std::size_t r = 0; r < labels.size(); ++r) {
    const float* row = logits.data() + r * classes;
    const auto best = std::max_element(row, row + classes) - row;
    correct += best == labels[r] ? 1 : 0;
  }
  return correct;
}

std::vector<std::size_t> iota_indices(std::size_t n) {
  std::vector<std::size_t> v(n);
  std::iota(v.begin(), v.end(), std::size_t{0});
  return v;
}

Checkpoint make_checkpoint(const Model<float>& model, int epoch, const TrainConfig& config,
                           const std::mt19937_64& rng, const Normalization& norm) {
  Checkpoint c;
  c.spec = model.spec;
  c.state = model.state.clone();
  c.epoch = epoch;
  c.config_echo = config.echo();
  c.rng_state = rng_text(rng);
  c.normalization = norm;
  return c;
}

void emit(TrainResult& result, const MetricsSink& sink, MetricsRecord record) {
  if (sink) sink(record);
  result.records.push_back(std::move(record));
}

[[noreturn]] void abort_non_finite(TrainResult& result, const MetricsSink& sink, const TrainConfig& config,
                                   int epoch, std::int64_t step, double loss) {
  MetricsRecord rec;
  rec.experiment = config.experiment;
  rec.epoch = epoch;
  rec.step = step;
  rec.tags.emplace_back("status", "aborted");
  rec.tags.emplace_back("reason", "non-finite-loss");
  rec.set("loss", loss);
  rec.set("lr", lr_at(config, epoch));
  emit(result, sink, rec);
  throw TrainingAborted("training aborted: non-finite loss at epoch " + std::to_string(epoch) + ", step " +
                        std::to_string(step));
}

}  // namespace

void TrainConfig::validate() const {
  if (batch_size < 1) throw std::invalid_argument("train config: batch_size must be positive");
  if (epochs < 0) throw std::invalid_argument("train config: epochs must be non-negative");
  if (!(base_lr > 0)) throw std::invalid_argument("train config: base_lr must be positive");
  if (!(lr_drop_factor > 0)) throw std::invalid_argument("train config: lr_drop_factor must be positive");
  if (momentum < 0 || momentum >= 1) throw std::invalid_argument("train config: momentum must lie in [0,1)");
  if (weight_decay < 0) throw std::invalid_argument("train config: weight_decay must be non-negative");
  if (snapshot_every < 0) throw std::invalid_argument("train config: snapshot_every must be non-negative");
  for (std::size_t i = 0; i < lr_drop_epochs.size(); ++i) {
    const int e = lr_drop_epochs[i];
    if (e < 0 || (epochs > 0 && e >= epochs)) {
      throw std::invalid_argument("train config: lr drop epoch " + std::to_string(e) + " outside [0, epochs)");
    }
    if (i > 0 && e <= lr_drop_epochs[i - 1]) {
      throw std::invalid_argument("train config: lr_drop_epochs must be strictly increasing");
    }
  }
  rotation_spec.validate();
}

std::string TrainConfig::echo() const {
  std::ostringstream os;
  os << "experiment=" << experiment << '\n'
     << "batch_size=" << batch_size << '\n'
     << "epochs=" << epochs << '\n'
     << "base_lr=" << format_number(base_lr) << '\n'
     << "lr_drop_epochs=" << join_ints(lr_drop_epochs) << '\n'
     << "lr_drop_factor=" << format_number(lr_drop_factor) << '\n'
     << "momentum=" << format_number(momentum) << '\n'
     << "weight_decay=" << format_number(weight_decay) << '\n'
     << "seed=" << seed << '\n'
     << "rotations=" << rotation_spec.name << '\n'
     << "interpolation=" << (interpolation == Interpolation::bilinear ? "bilinear" : "nearest") << '\n'
     << "snapshot_every=" << snapshot_every << '\n'
     << "hflip=" << (hflip ? 1 : 0) << '\n';
  return os.str();
}

TrainConfig TrainConfig::from_echo(const std::string& text) {
  TrainConfig c;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw std::invalid_argument("config echo: malformed line '" + line + "'");
    const auto key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "experiment") c.experiment = value;
    else if (key == "batch_size") c.batch_size = std::stoi(value);
    else if (key == "epochs") c.epochs = std::stoi(value);
    else if (key == "base_lr") c.base_lr = std::stod(value);
    else if (key == "lr_drop_epochs") c.lr_drop_epochs = split_ints(value);
    else if (key == "lr_drop_factor") c.lr_drop_factor = std::stod(value);
    else if (key == "momentum") c.momentum = std::stod(value);
    else if (key == "weight_decay") c.weight_decay = std::stod(value);
    else if (key == "seed") c.seed = std::stoull(value);
    else if (key == "rotations") c.rotation_spec = RotationTaskSpec::from_name(value);
    else if (key == "interpolation") c.interpolation = value == "nearest" ? Interpolation::nearest : Interpolation::bilinear;
    else if (key == "snapshot_every") c.snapshot_every = std::stoi(value);
    else if (key == "hflip") c.hflip = value == "1";
  }
  return c;
}

TrainConfig TrainConfig::scaled(int epochs) {
  TrainConfig c;
  c.epochs = epochs;
  c.lr_drop_epochs.clear();
  for (double frac : {0.3, 0.6, 0.8}) {
    const int e = static_cast<int>(std::lround(frac * epochs));
    if (e > 0 && e < epochs && (c.lr_drop_epochs.empty() || e > c.lr_drop_epochs.back())) c.lr_drop_epochs.push_back(e);
  }
  c.snapshot_every = std::max(1, static_cast<int>(std::lround(0.2 * epochs)));
  return c;
}

double lr_at(const TrainConfig& config, int epoch) {
  if (epoch < 0 || (config.epochs > 0 && epoch >= config.epochs)) {
    throw std::out_of_range("lr_at: epoch " + std::to_string(epoch) + " outside [0, " +
                            std::to_string(config.epochs) + ")");
  }
  int drops = 0;
  for (int e : config.lr_drop_epochs) drops += e <= epoch ? 1 : 0;
  return config.base_lr * std::pow(config.lr_drop_factor, drops);
}

Tensor<float> rotation_loss(const ModelSpec& spec, ModelState<float>& state, const ImageBatch& raw_images,
                            const RotationTaskSpec& task, const Normalization& norm, Mode mode,
                            Interpolation interp) {
  auto ssl = build_ssl_batch(raw_images, task, interp);
  if (!norm.mean.empty()) normalize_in_place(ssl.images, norm);
  auto logits = forward(spec, state, to_tensor(ssl.images), mode);
  return softmax_cross_entropy(logits, ssl.labels);
}

Normalization normalization_for(const DatasetSplit& data) {
  return data.normalization ? *data.normalization : compute_normalization(data);
}

TrainResult train_ssl(const DatasetSplit& data, Model<float> model, const TrainConfig& config,
                      const MetricsSink& sink) {
  config.validate();
  data.validate();
  const auto& task = config.rotation_spec;
  const std::size_t n = data.count();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n);
  if (batch == 0) throw std::invalid_argument("train_ssl: empty dataset");
  const auto norm = normalization_for(data);

  std::mt19937_64 rng(config.seed ^ kShuffleSalt);
  model.state.set_trainable("", true);
  auto params = parameter_list(model.spec, model.state, true);
  OptimizerState<float> opt;
  opt.momentum = static_cast<float>(config.momentum);
  opt.weight_decay = static_cast<float>(config.weight_decay);

  TrainResult result;
  if (config.snapshot_every > 0) result.snapshots.push_back(make_checkpoint(model, 0, config, rng, norm));

  auto order = iota_indices(n);
  std::int64_t step = 0;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    opt.lr = static_cast<float>(lr_at(config, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::int64_t correct = 0, seen = 0, batches = 0;
    for (std::size_t start = 0; start + batch <= n; start += batch) {
      auto raw = data.gather(std::span(order).subspan(start, batch));
      if (config.hflip) {
        std::bernoulli_distribution coin(0.5);
        for (int i = 0; i < raw.count; ++i) {
          if (!coin(rng)) continue;
          const auto flipped = flip_horizontal(raw.image(i));
          std::copy(flipped.pixels.begin(), flipped.pixels.end(),
                    raw.pixels.begin() + static_cast<std::ptrdiff_t>(i * raw.image_size()));
        }
      }
      auto ssl = build_ssl_batch(raw, task, config.interpolation);
      normalize_in_place(ssl.images, norm);
      for (auto& p : params) p.zero_grad();
      auto logits = forward(model.spec, model.state, to_tensor(ssl.images), Mode::train);
      auto loss = softmax_cross_entropy(logits, ssl.labels);
      const double value = loss.item();
      if (!std::isfinite(value)) abort_non_finite(result, sink, config, epoch, step, value);
      backward(loss);
      try {
        sgd_step(std::span(params), opt);
      } catch (const NonFiniteError&) {
        abort_non_finite(result, sink, config, epoch, step, NAN);
      }
      loss_sum += value;
      correct += count_correct(logits.data(), task.K, ssl.labels);
      seen += static_cast<std::int64_t>(ssl.labels.size());
      ++batches;
      ++step;
    }
    MetricsRecord rec;
    rec.experiment = config.experiment;
    rec.epoch = epoch + 1;
    rec.step = step;
    rec.set("loss", batches ? loss_sum / static_cast<double>(batches) : 0.0);
    rec.set("rotation_acc", seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0);
    rec.set("lr", lr_at(config, epoch));
    emit(result, sink, std::move(rec));
    if (config.snapshot_every > 0 && (epoch + 1) % config.snapshot_every == 0) {
      result.snapshots.push_back(make_checkpoint(model, epoch + 1, config, rng, norm));
    }
  }
  result.final = make_checkpoint(model, config.epochs, config, rng, norm);
  return result;
}

Regime regime_from_name(const std::string& name) {
  if (name == "frozen-probe" || name == "frozen") return Regime::frozen_probe;
  if (name == "finetune") return Regime::finetune;
  if (name == "supervised") return Regime::supervised;
  throw std::invalid_argument("unknown regime '" + name + "' (frozen-probe, finetune, supervised)");
}

std::string regime_name(Regime regime) {
  switch (regime) {
    case Regime::frozen_probe:
      return "frozen-probe";
    case Regime::finetune:
      return "finetune";
    case Regime::supervised:
      return "supervised";
  }
  return "unknown";
}

TrainResult train_classifier(const DatasetSplit& data, Model<float> model, std::size_t backbone_end, Regime regime,
                             const TrainConfig& config, const MetricsSink& sink) {
  config.validate();
  data.validate();
  const auto& spec = model.spec;
  if (backbone_end > spec.layers.size()) throw std::invalid_argument("train_classifier: backbone_end beyond layers");
  if (regime == Regime::supervised && backbone_end != 0) {
    throw std::invalid_argument("train_classifier: supervised regime trains from scratch, backbone_end must be 0");
  }
  if (regime != Regime::supervised && backbone_end == 0) {
    throw std::invalid_argument("train_classifier: " + regime_name(regime) + " regime needs a backbone");
  }
  if (spec.num_classes != data.num_classes()) {
    throw std::invalid_argument("train_classifier: model has " + std::to_string(spec.num_classes) +
                                " outputs, dataset has " + std::to_string(data.num_classes()) + " classes");
  }
  const std::size_t n = data.count();
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(config.batch_size), n);
  if (batch < 2) throw std::invalid_argument("train_classifier: need at least 2 labelled images");
  const auto norm = normalization_for(data);

  const bool frozen = regime == Regime::frozen_probe;
  model.state.set_trainable("", true);
  if (frozen) {
    for (std::size_t i = 0; i < backbone_end; ++i) model.state.set_trainable(spec.layers[i].name + ".", false);
  }
  auto params = parameter_list(spec, model.state, true);
  const std::size_t head_begin = frozen ? backbone_end : 0;

  // Frozen features never change, so they are computed once.
  std::vector<float> cached;
  Shape item_shape;
  std::size_t item_size = 0;
  auto load_inputs = [&](std::span<const std::size_t> idx) {
    auto raw = data.gather(idx);
    normalize_in_place(raw, norm);
    return to_tensor(raw);
  };
  if (frozen) {
    NoGradGuard guard;
    constexpr std::size_t chunk = 256;
    const auto all = iota_indices(n);
    for (std::size_t s = 0; s < n; s += chunk) {
      const auto idx = std::span(all).subspan(s, std::min(chunk, n - s));
      auto f = forward_range(spec, model.state, load_inputs(idx), Mode::eval, 0, backbone_end);
      if (item_shape.empty()) {
        item_shape.assign(f.shape().begin() + 1, f.shape().end());
        item_size = f.size() / static_cast<std::size_t>(f.dim(0));
      }
      cached.insert(cached.end(), f.data().begin(), f.data().end());
    }
  }

  std::mt19937_64 rng(config.seed ^ kShuffleSalt);
  OptimizerState<float> opt;
  opt.momentum = static_cast<float>(config.momentum);
  opt.weight_decay = static_cast<float>(config.weight_decay);
  TrainResult result;
  auto order = iota_indices(n);
  std::int64_t step = 0;
  const int classes = spec.num_classes;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    opt.lr = static_cast<float>(lr_at(config, epoch));
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0;
    std::int64_t correct = 0, seen = 0, batches = 0;
    for (std::size_t start = 0; start + batch <= n; start += batch) {
      const auto idx = std::span(order).subspan(start, batch);
      std::vector<int> labels(batch);
      for (std::size_t k = 0; k < batch; ++k) labels[k] = data.labels[idx[k]];
      Tensor<float> input;
      if (frozen) {
        Shape shape{static_cast<std::int64_t>(batch)};
        shape.insert(shape.end(), item_shape.begin(), item_shape.end());
        std::vector<float> values(batch * item_size);
        for (std::size_t k = 0; k < batch; ++k) {
          std::copy_n(cached.begin() + static_cast<std::ptrdiff_t>(idx[k] * item_size), item_size,
                      values.begin() + static_cast<std::ptrdiff_t>(k * item_size));
        }
        input = Tensor<float>(shape, std::move(values));
      } else {
        input = load_inputs(idx);
      }
      for (auto& p : params) p.zero_grad();
      auto logits = forward_range(spec, model.state, input, Mode::train, head_begin, spec.layers.size());
      auto loss = softmax_cross_entropy(logits, labels);
      const double value = loss.item();
      if (!std::isfinite(value)) abort_non_finite(result, sink, config, epoch, step, value);
      backward(loss);
      try {
        sgd_step(std::span(params), opt);
      } catch (const NonFiniteError&) {
        abort_non_finite(result, sink, config, epoch, step, NAN);
      }
      loss_sum += value;
      correct += count_correct(logits.data(), classes, labels);
      seen += static_cast<std::int64_t>(batch);
      ++batches;
      ++step;
    }
    MetricsRecord rec;
    rec.experiment = config.experiment;
    rec.epoch = epoch + 1;
    rec.step = step;
    rec.tags.emplace_back("regime", regime_name(regime));
    rec.set("loss", batches ? loss_sum / static_cast<double>(batches) : 0.0);
    rec.set("object_acc", seen ? static_cast<double>(correct) / static_cast<double>(seen) : 0.0);
    rec.set("lr", lr_at(config, epoch));
    emit(result, sink, std::move(rec));
  }
  result.final = make_checkpoint(model, config.epochs, config, rng, norm);
  return result;
}

ProbeModel attach_probe(const Model<float>& backbone, const std::string& tap, ProbeKind kind, int num_classes,
                        const std::vector<int>& input_chw, std::uint64_t seed, double width, int hidden) {
  const auto trunk = truncate(backbone.spec, tap);
  const auto feature_shape = tap_shape(backbone.spec, tap, input_chw);
  auto head = kind == ProbeKind::nonlinear ? build_probe_nonlinear(feature_shape, num_classes, seed, hidden)
                                           : build_probe_conv(feature_shape, num_classes, seed, width);
  ProbeModel out;
  out.model.spec = compose(trunk, head.spec);
  out.model.spec.input_shape = backbone.spec.input_shape;
  out.model.state = merge_states(restrict_state(backbone.state, trunk), head.state);
  out.backbone_end = trunk.layers.size();
  return out;
}

}  // namespace rotssl
