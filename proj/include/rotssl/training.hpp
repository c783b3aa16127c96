// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Rotation-prediction training, classifier training (frozen probe,
// fine-tuning, supervised) and the step learning-rate schedule.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rotssl/checkpoint.hpp"
#include "rotssl/dataset.hpp"
#include "rotssl/metrics.hpp"
#include "rotssl/model.hpp"
#include "rotssl/rotations.hpp"

namespace rotssl {

struct TrainConfig {
  int batch_size = 128;
  int epochs = 100;
  double base_lr = 0.1;
  std::vector<int> lr_drop_epochs{30, 60, 80};
  double lr_drop_factor = 0.2;
  double momentum = 0.9;
  double weight_decay = 5e-4;
  std::uint64_t seed = 0;
  RotationTaskSpec rotation_spec = RotationTaskSpec::four();
  Interpolation interpolation = Interpolation::bilinear;
  int snapshot_every = 20;
  // Random horizontal flip before rotating (off by default).
  bool hflip = false;
  std::string experiment = "ssl";

  void validate() const;
  /// key=value lines; enough to rebuild the config with from_echo.
  std::string echo() const;
  static TrainConfig from_echo(const std::string& text);

  /// Same schedule shape on a shorter run: drops at 30%, 60% and 80% of
  /// `epochs`.
  static TrainConfig scaled(int epochs);
};

/// base_lr * factor^(number of drop epochs <= epoch).
double lr_at(const TrainConfig& config, int epoch);

/// Mean cross-entropy over the build_ssl_batch expansion of `raw_images`.
/// Rotation happens in raw pixel space, normalization afterwards.
Tensor<float> rotation_loss(const ModelSpec& spec, ModelState<float>& state, const ImageBatch& raw_images,
                            const RotationTaskSpec& task, const Normalization& norm, Mode mode,
                            Interpolation interp = Interpolation::bilinear);

/// Raised when a loss turns non-finite; a diagnostic record has already been
/// emitted.
class TrainingAborted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  Checkpoint final;
  std::vector<Checkpoint> snapshots;
  std::vector<MetricsRecord> records;
};

/// The dataset's normalization if it carries one, otherwise statistics of
/// the split itself.
Normalization normalization_for(const DatasetSplit& data);

/// Self-supervised training. Labels of `data` are ignored. Snapshots are
/// taken before the first epoch and after every snapshot_every epochs.
TrainResult train_ssl(const DatasetSplit& data, Model<float> model, const TrainConfig& config,
                      const MetricsSink& sink = {});

enum class Regime { frozen_probe, finetune, supervised };

Regime regime_from_name(const std::string& name);
std::string regime_name(Regime regime);

/// `backbone_end` separates the pretrained layers from the freshly
/// initialised head. frozen_probe keeps layers [0, backbone_end) frozen and in
/// eval mode, finetune trains everything, supervised requires backbone_end 0.
TrainResult train_classifier(const DatasetSplit& data, Model<float> model, std::size_t backbone_end, Regime regime,
                             const TrainConfig& config, const MetricsSink& sink = {});

enum class ProbeKind { nonlinear, conv };

struct ProbeModel {
  Model<float> model;
  std::size_t backbone_end = 0;
};

/// Backbone layers up to `tap` followed by a fresh probe head.
ProbeModel attach_probe(const Model<float>& backbone, const std::string& tap, ProbeKind kind, int num_classes,
                        const std::vector<int>& input_chw, std::uint64_t seed, double width = 1.0,
                        int hidden = 200);

}  // namespace rotssl
