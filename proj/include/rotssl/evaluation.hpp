// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Accuracy reports and the experiment harnesses: depth sweep, rotation-count
// ablation, snapshot correlation curve and the semi-supervised sweep.

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "rotssl/checkpoint.hpp"
#include "rotssl/dataset.hpp"
#include "rotssl/metrics.hpp"
#include "rotssl/model.hpp"
#include "rotssl/training.hpp"

namespace rotssl {

struct EvalReport {
  std::string experiment;
  std::vector<std::pair<std::string, std::string>> config;
  double accuracy = 0;
  std::vector<double> per_class;
  // confusion[true][predicted]
  std::vector<std::vector<std::int64_t>> confusion;
  std::vector<std::string> class_names;
  std::optional<double> wall_seconds;

  std::int64_t total() const;
  std::int64_t trace() const;
  std::string config_value(const std::string& key) const;
};

/// Top-1 report from row-major logits; argmax ties go to the lowest index.
EvalReport report_from_logits(std::span<const float> logits, int num_classes, std::span<const int> labels,
                              const std::string& experiment);

/// Single eval-mode pass over `data`, normalised with `norm`.
EvalReport evaluate(const ModelSpec& spec, ModelState<float>& state, const DatasetSplit& data,
                    const Normalization& norm, const std::string& experiment = "eval");

/// Rotation-prediction accuracy over all K rotated copies of `data`.
EvalReport evaluate_rotation(const ModelSpec& spec, ModelState<float>& state, const DatasetSplit& data,
                             const RotationTaskSpec& task, const Normalization& norm,
                             Interpolation interp = Interpolation::bilinear, const std::string& experiment = "rotation");

/// Multi-line text form: "report experiment=..." then config, confusion rows.
std::string format_report(const EvalReport& report);
EvalReport parse_report(const std::string& text);
std::string format_reports(const std::vector<EvalReport>& reports);
std::vector<EvalReport> parse_reports(const std::string& text);

/// Spearman rank correlation with average ranks for ties; 0 for constant
/// series.
double spearman(std::span<const double> x, std::span<const double> y);

struct HarnessConfig {
  TrainConfig ssl = TrainConfig::scaled(20);
  TrainConfig probe = TrainConfig::scaled(20);
  TrainConfig supervised = TrainConfig::scaled(20);
  double width = 1.0;
  int probe_hidden = 200;
  // Classifier runs on small subsets get extra epochs until they reach this
  // many SGD steps (0 = plain epoch budget).
  int min_classifier_steps = 0;
  std::uint64_t seed = 0;
  bool deterministic = true;
  // Completed stages are saved here and reloaded on rerun.
  std::optional<std::filesystem::path> cache_dir;
  MetricsSink sink;
};

/// `base` with its epoch count raised so that a run over `n` examples takes
/// at least `min_steps` SGD steps; drop epochs are rescaled to match.
TrainConfig budget_for(const TrainConfig& base, std::size_t n, int min_steps);

/// SSL backbone for the given depth and task, trained or loaded from the cache.
Checkpoint ssl_backbone(const DatasetSplit& train, int num_blocks, const RotationTaskSpec& task,
                        const HarnessConfig& config, const std::string& tag);

/// Trains a frozen-feature probe of `kind` on `tap` of `backbone` and
/// evaluates it on the test split. `data` must carry train normalization.
EvalReport frozen_probe_report(const DatasetPair& data, const Model<float>& backbone, const std::string& tap,
                               ProbeKind kind, const std::string& id, const TrainConfig& probe_config,
                               const HarnessConfig& config);

/// Non-linear probe on every tap of every depth. Experiment ids
/// "depth/<n>/ConvB<k>".
std::vector<EvalReport> depth_sweep(const DatasetPair& data, const std::vector<int>& depths,
                                    const HarnessConfig& config);

/// One SSL backbone per task (default 4 blocks), ConvB2 probe each.
std::vector<EvalReport> rotation_ablation(const DatasetPair& data, const std::vector<RotationTaskSpec>& tasks,
                                          const HarnessConfig& config, int num_blocks = 4);

struct CorrelationPoint {
  int epoch = 0;
  double rotation_acc = 0;
  double object_acc = 0;
};

/// Per snapshot: rotation accuracy on the test split and a fresh non-linear
/// probe on `tap`, trained with config.probe.
std::vector<CorrelationPoint> correlation_curve(const DatasetPair& data, const std::vector<Checkpoint>& snapshots,
                                                const HarnessConfig& config, const std::string& tap = "ConvB2");

/// Per size: the conv probe on frozen ConvB2 features of `backbone` and a
/// supervised 3-block network, trained on the same stratified subset.
/// Experiment ids "semisup/<n>/rotnet-probe" and "semisup/<n>/supervised".
std::vector<EvalReport> semisup_sweep(const DatasetPair& data, const Checkpoint& backbone,
                                      const std::vector<int>& per_class_sizes, const HarnessConfig& config);

}  // namespace rotssl
