// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <sstream>

namespace rotssl {

namespace {

constexpr std::size_t kEvalChunk = 256;

std::string cache_name(std::string id) {
  std::replace(id.begin(), id.end(), '/', '_');
  return id;
}

std::optional<EvalReport> cached_report(const HarnessConfig& config, const std::string& id) {
  if (!config.cache_dir) return std::nullopt;
  const auto path = *config.cache_dir / (cache_name(id) + ".report");
  if (!std::filesystem::exists(path)) return std::nullopt;
  const auto bytes = read_file(path);
  return parse_report(std::string(bytes.begin(), bytes.end()));
}

void store_report(const HarnessConfig& config, const EvalReport& report) {
  if (!config.cache_dir) return;
  std::filesystem::create_directories(*config.cache_dir);
  write_text_atomic(*config.cache_dir / (cache_name(report.experiment) + ".report"), format_report(report));
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void finish_report(EvalReport& report, const HarnessConfig& config, std::chrono::steady_clock::time_point t0) {
  if (!config.deterministic) report.wall_seconds = seconds_since(t0);
}

DatasetPair with_train_normalization(const DatasetPair& data) {
  DatasetPair out = data;
  const auto norm = normalization_for(data.train);
  out.train.normalization = norm;
  out.test.normalization = norm;
  return out;
}

std::vector<int> input_chw(const DatasetSplit& split) { return {split.channels, split.size, split.size}; }

}  // namespace

EvalReport frozen_probe_report(const DatasetPair& data, const Model<float>& backbone, const std::string& tap,
                               ProbeKind kind, const std::string& id, const TrainConfig& probe_config,
                               const HarnessConfig& config) {
  if (auto hit = cached_report(config, id)) return *hit;
  const auto t0 = std::chrono::steady_clock::now();
  auto probe = attach_probe(backbone, tap, kind, data.train.num_classes(), input_chw(data.train), config.seed + 101,
                            config.width, config.probe_hidden);
  auto cfg = budget_for(probe_config, data.train.count(), config.min_classifier_steps);
  cfg.seed = config.seed;
  cfg.experiment = id;
  auto trained = train_classifier(data.train, std::move(probe.model), probe.backbone_end, Regime::frozen_probe, cfg,
                                  config.sink);
  auto report = evaluate(trained.final.spec, trained.final.state, data.test, *data.train.normalization, id);
  report.config = {{"tap", tap},
                   {"probe", kind == ProbeKind::nonlinear ? "nonlinear" : "conv"},
                   {"seed", std::to_string(config.seed)},
                   {"probe_epochs", std::to_string(cfg.epochs)},
                   {"train_images", std::to_string(data.train.count())}};
  finish_report(report, config, t0);
  store_report(config, report);
  return report;
}

std::int64_t EvalReport::total() const {
  std::int64_t t = 0;
  for (const auto& row : confusion) t = std::accumulate(row.begin(), row.end(), t);
  return t;
}

std::int64_t EvalReport::trace() const {
  std::int64_t t = 0;
  for (std::size_t i = 0; i < confusion.size(); ++i) t += confusion[i][i];
  return t;
}

std::string EvalReport::config_value(const std::string& key) const {
  for (const auto& [k, v] : config) {
    if (k == key) return v;
  }
  return {};
}

EvalReport report_from_logits(std::span<const float> logits, int num_classes, std::span<const int> labels,
                              const std::string& experiment) {
  if (labels.empty()) throw std::invalid_argument("evaluate: empty dataset");
  if (num_classes < 1 || logits.size() != labels.size() * static_cast<std::size_t>(num_classes)) {
    throw std::invalid_argument("evaluate: logits do not match labels x classes");
  }
  EvalReport r;
  r.experiment = experiment;
  r.confusion.assign(static_cast<std::size_t>(num_classes), std::vector<std::int64_t>(num_classes, 0));
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const float* row = logits.data() + i * num_classes;
    int best = 0;
    for (int k = 1; k < num_classes; ++k) {
      if (row[k] > row[best]) best = k;
    }
    if (labels[i] < 0 || labels[i] >= num_classes) throw std::out_of_range("evaluate: label outside [0, classes)");
    ++r.confusion[labels[i]][best];
  }
  r.accuracy = static_cast<double>(r.trace()) / static_cast<double>(r.total());
  for (int k = 0; k < num_classes; ++k) {
    const auto n = std::accumulate(r.confusion[k].begin(), r.confusion[k].end(), std::int64_t{0});
    r.per_class.push_back(n ? static_cast<double>(r.confusion[k][k]) / static_cast<double>(n) : 0.0);
  }
  return r;
}

EvalReport evaluate(const ModelSpec& spec, ModelState<float>& state, const DatasetSplit& data,
                    const Normalization& norm, const std::string& experiment) {
  if (data.count() == 0) throw std::invalid_argument("evaluate: empty dataset");
  NoGradGuard guard;
  std::vector<float> logits;
  std::vector<std::size_t> idx(data.count());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  for (std::size_t s = 0; s < idx.size(); s += kEvalChunk) {
    auto batch = data.gather(std::span(idx).subspan(s, std::min(kEvalChunk, idx.size() - s)));
    normalize_in_place(batch, norm);
    auto out = forward(spec, state, to_tensor(batch), Mode::eval);
    logits.insert(logits.end(), out.data().begin(), out.data().end());
  }
  auto r = report_from_logits(logits, spec.num_classes, data.labels, experiment);
  r.class_names = data.class_names;
  return r;
}

EvalReport evaluate_rotation(const ModelSpec& spec, ModelState<float>& state, const DatasetSplit& data,
                             const RotationTaskSpec& task, const Normalization& norm, Interpolation interp,
                             const std::string& experiment) {
  if (data.count() == 0) throw std::invalid_argument("evaluate_rotation: empty dataset");
  if (spec.num_classes != task.K) throw std::invalid_argument("evaluate_rotation: model head does not match K");
  NoGradGuard guard;
  std::vector<float> logits;
  std::vector<int> labels;
  std::vector<std::size_t> idx(data.count());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  const std::size_t chunk = std::max<std::size_t>(1, kEvalChunk / static_cast<std::size_t>(task.K));
  for (std::size_t s = 0; s < idx.size(); s += chunk) {
    auto ssl = build_ssl_batch(data.gather(std::span(idx).subspan(s, std::min(chunk, idx.size() - s))), task, interp);
    normalize_in_place(ssl.images, norm);
    auto out = forward(spec, state, to_tensor(ssl.images), Mode::eval);
    logits.insert(logits.end(), out.data().begin(), out.data().end());
    labels.insert(labels.end(), ssl.labels.begin(), ssl.labels.end());
  }
  auto r = report_from_logits(logits, task.K, labels, experiment);
  for (double a : task.angles) r.class_names.push_back(format_number(a));
  return r;
}

std::string format_report(const EvalReport& r) {
  std::ostringstream os;
  os << "report experiment=" << r.experiment << " accuracy=" << format_number(r.accuracy)
     << " classes=" << r.confusion.size();
  if (r.wall_seconds) os << " time=" << format_number(*r.wall_seconds);
  os << '\n';
  os << "config";
  for (const auto& [k, v] : r.config) os << ' ' << k << '=' << v;
  os << '\n';
  os << "class_names";
  for (const auto& n : r.class_names) os << ' ' << n;
  os << '\n';
  os << "per_class";
  for (double v : r.per_class) os << ' ' << format_number(v);
  os << '\n';
  for (const auto& row : r.confusion) {
    os << "confusion";
    for (auto v : row) os << ' ' << v;
    os << '\n';
  }
  os << "end\n";
  return os.str();
}

std::vector<EvalReport> parse_reports(const std::string& text) {
  std::vector<EvalReport> out;
  std::istringstream in(text);
  std::string line;
  EvalReport* cur = nullptr;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string kw;
    ls >> kw;
    if (kw == "report") {
      out.emplace_back();
      cur = &out.back();
      std::string field;
      while (ls >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("report: malformed field '" + field + "'");
        const auto k = field.substr(0, eq), v = field.substr(eq + 1);
        if (k == "experiment") cur->experiment = v;
        else if (k == "accuracy") cur->accuracy = std::stod(v);
        else if (k == "time") cur->wall_seconds = std::stod(v);
      }
      continue;
    }
    if (!cur) throw std::invalid_argument("report: '" + kw + "' line before a report header");
    if (kw == "config") {
      std::string field;
      while (ls >> field) {
        const auto eq = field.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("report: malformed config '" + field + "'");
        cur->config.emplace_back(field.substr(0, eq), field.substr(eq + 1));
      }
    } else if (kw == "class_names") {
      std::string name;
      while (ls >> name) cur->class_names.push_back(name);
    } else if (kw == "per_class") {
      std::string v;
      while (ls >> v) cur->per_class.push_back(std::stod(v));
    } else if (kw == "confusion") {
      std::vector<std::int64_t> row;
      std::int64_t v;
      while (ls >> v) row.push_back(v);
      cur->confusion.push_back(std::move(row));
    } else if (kw == "end") {
      cur = nullptr;
    } else {
      throw std::invalid_argument("report: unknown line '" + kw + "'");
    }
  }
  return out;
}

EvalReport parse_report(const std::string& text) {
  auto all = parse_reports(text);
  if (all.size() != 1) throw std::invalid_argument("expected exactly one report");
  return all.front();
}

std::string format_reports(const std::vector<EvalReport>& reports) {
  std::string out;
  for (const auto& r : reports) out += format_report(r);
  return out;
}

double spearman(std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) throw std::invalid_argument("spearman: series lengths differ");
  const std::size_t n = x.size();
  if (n < 2) return 0.0;
  auto ranks = [n](std::span<const double> v) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return v[a] < v[b]; });
    std::vector<double> r(n);
    for (std::size_t i = 0; i < n;) {
      std::size_t j = i;
      while (j + 1 < n && v[order[j + 1]] == v[order[i]]) ++j;
      const double avg = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
      for (std::size_t k = i; k <= j; ++k) r[order[k]] = avg;
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / static_cast<double>(n);
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / static_cast<double>(n);
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  if (sxx == 0 || syy == 0) return 0.0;
  return sxy / std::sqrt(sxx * syy);
}

TrainConfig budget_for(const TrainConfig& base, std::size_t n, int min_steps) {
  if (min_steps <= 0 || n == 0) return base;
  const std::size_t batch = std::min<std::size_t>(static_cast<std::size_t>(base.batch_size), n);
  const std::size_t per_epoch = std::max<std::size_t>(1, n / batch);
  const int needed = static_cast<int>((static_cast<std::size_t>(min_steps) + per_epoch - 1) / per_epoch);
  if (needed <= base.epochs) return base;
  auto out = TrainConfig::scaled(needed);
  out.batch_size = base.batch_size;
  out.base_lr = base.base_lr;
  out.lr_drop_factor = base.lr_drop_factor;
  out.momentum = base.momentum;
  out.weight_decay = base.weight_decay;
  out.seed = base.seed;
  out.rotation_spec = base.rotation_spec;
  out.interpolation = base.interpolation;
  out.hflip = base.hflip;
  out.experiment = base.experiment;
  out.snapshot_every = 0;
  return out;
}

Checkpoint ssl_backbone(const DatasetSplit& train, int num_blocks, const RotationTaskSpec& task,
                        const HarnessConfig& config, const std::string& tag) {
  auto model = build_rotnet(num_blocks, task.K, config.seed, config.width);
  std::optional<std::filesystem::path> path;
  if (config.cache_dir) {
    path = *config.cache_dir / ("ssl_" + cache_name(tag) + ".ckpt");
    if (std::filesystem::exists(*path)) return load_checkpoint(*path, model.spec);
  }
  auto cfg = config.ssl;
  cfg.rotation_spec = task;
  cfg.seed = config.seed;
  cfg.experiment = "ssl/" + tag;
  cfg.snapshot_every = 0;
  auto result = train_ssl(train, std::move(model), cfg, config.sink);
  if (path) {
    std::filesystem::create_directories(*config.cache_dir);
    save_checkpoint(*path, result.final);
  }
  return result.final;
}

std::vector<EvalReport> depth_sweep(const DatasetPair& raw, const std::vector<int>& depths,
                                    const HarnessConfig& config) {
  const auto data = with_train_normalization(raw);
  std::vector<EvalReport> reports;
  for (int depth : depths) {
    const auto backbone =
        ssl_backbone(data.train, depth, RotationTaskSpec::four(), config, "depth" + std::to_string(depth)).model();
    for (int k = 1; k <= depth; ++k) {
      const auto tap = "ConvB" + std::to_string(k);
      const auto id = "depth/" + std::to_string(depth) + "/" + tap;
      auto r = frozen_probe_report(data, backbone, tap, ProbeKind::nonlinear, id, config.probe, config);
      if (r.config_value("depth").empty()) r.config.emplace_back("depth", std::to_string(depth));
      reports.push_back(std::move(r));
    }
  }
  return reports;
}

std::vector<EvalReport> rotation_ablation(const DatasetPair& raw, const std::vector<RotationTaskSpec>& tasks,
                                          const HarnessConfig& config, int num_blocks) {
  const auto data = with_train_normalization(raw);
  std::vector<EvalReport> reports;
  for (const auto& task : tasks) {
    task.validate();
    const auto id = "ablation/" + task.name;
    auto ckpt = ssl_backbone(data.train, num_blocks, task, config, "rot" + task.name + "_b" + std::to_string(num_blocks));
    auto model = ckpt.model();
    auto r = frozen_probe_report(data, model, "ConvB2", ProbeKind::nonlinear, id, config.probe, config);
    if (r.config_value("rotations").empty()) {
      const auto rot = evaluate_rotation(model.spec, model.state, data.test, task, *data.train.normalization,
                                         config.ssl.interpolation);
      r.config.emplace_back("rotations", task.name);
      r.config.emplace_back("rotation_acc", format_number(rot.accuracy));
      store_report(config, r);
    }
    reports.push_back(std::move(r));
  }
  return reports;
}

std::vector<CorrelationPoint> correlation_curve(const DatasetPair& raw, const std::vector<Checkpoint>& snapshots,
                                                const HarnessConfig& config, const std::string& tap) {
  if (snapshots.empty()) throw std::invalid_argument("correlation_curve: no snapshots given");
  const auto data = with_train_normalization(raw);
  std::vector<CorrelationPoint> points;
  for (const auto& snap : snapshots) {
    auto model = snap.model();
    const auto task = TrainConfig::from_echo(snap.config_echo).rotation_spec;
    const auto norm = snap.normalization ? *snap.normalization : *data.train.normalization;
    const auto rot = evaluate_rotation(model.spec, model.state, data.test, task, norm);
    auto probe_data = data;
    probe_data.train.normalization = norm;
    probe_data.test.normalization = norm;
    const auto id = "correlation/epoch" + std::to_string(snap.epoch);
    const auto obj = frozen_probe_report(probe_data, model, tap, ProbeKind::nonlinear, id, config.probe, config);
    points.push_back({snap.epoch, rot.accuracy, obj.accuracy});
    if (config.sink) {
      MetricsRecord rec;
      rec.experiment = "correlation";
      rec.epoch = snap.epoch;
      rec.set("rotation_acc", rot.accuracy);
      rec.set("object_acc", obj.accuracy);
      config.sink(rec);
    }
  }
  return points;
}

std::vector<EvalReport> semisup_sweep(const DatasetPair& raw, const Checkpoint& backbone,
                                      const std::vector<int>& per_class_sizes, const HarnessConfig& config) {
  const auto data = with_train_normalization(raw);
  const auto model = backbone.model();
  std::vector<EvalReport> reports;
  for (int size : per_class_sizes) {
    // One subset per size, shared by both arms.
    const auto idx = stratified_subset(data.train, size, config.seed);
    DatasetPair subset{data.train.subset(idx), data.test};
    const auto prefix = "semisup/" + std::to_string(size) + "/";

    auto probe = frozen_probe_report(subset, model, "ConvB2", ProbeKind::conv, prefix + "rotnet-probe", config.probe, config);
    if (probe.config_value("arm").empty()) {
      probe.config.emplace_back("arm", "rotnet-probe");
      probe.config.emplace_back("per_class", std::to_string(size));
      store_report(config, probe);
    }
    reports.push_back(std::move(probe));

    const auto sup_id = prefix + "supervised";
    if (auto hit = cached_report(config, sup_id)) {
      reports.push_back(*hit);
      continue;
    }
    const auto t0 = std::chrono::steady_clock::now();
    auto cfg = budget_for(config.supervised, subset.train.count(), config.min_classifier_steps);
    cfg.seed = config.seed;
    cfg.experiment = sup_id;
    auto net = build_rotnet(3, data.train.num_classes(), config.seed + 202, config.width);
    auto trained = train_classifier(subset.train, std::move(net), 0, Regime::supervised, cfg, config.sink);
    auto r = evaluate(trained.final.spec, trained.final.state, subset.test, *data.train.normalization, sup_id);
    r.config = {{"arm", "supervised"},
                {"per_class", std::to_string(size)},
                {"seed", std::to_string(config.seed)},
                {"epochs", std::to_string(cfg.epochs)},
                {"train_images", std::to_string(subset.train.count())}};
    finish_report(r, config, t0);
    store_report(config, r);
    reports.push_back(std::move(r));
  }
  return reports;
}

}  // namespace rotssl
