// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Command-line entry point. Every option can also come from a key=value
// file (--config); options given on the command line win. Each run writes
// config.echo into the output directory; `rotssl <command> --config
// <out>/config.echo` repeats it.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "rotssl/checkpoint.hpp"
#include "rotssl/config.hpp"
#include "rotssl/dataset.hpp"
#include "rotssl/evaluation.hpp"
#include "rotssl/introspection.hpp"
#include "rotssl/metrics.hpp"
#include "rotssl/model.hpp"
#include "rotssl/training.hpp"

namespace fs = std::filesystem;
using namespace rotssl;

namespace {

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Field {
  std::string name;
  std::string desk;
  std::string full;
  std::string help;
  bool flag = false;
};

// Defaults for the desk profile and for --full-reproduction.
const std::vector<Field>& fields() {
  static const std::vector<Field> all{
      {"data-dir", "toy", "toy", "dataset directory, or 'toy' for the generated toy set"},
      {"out-dir", "out", "out", "output directory"},
      {"seed", "0", "0", "training seed"},
      {"deterministic", "false", "false", "omit wall-clock fields so reruns are byte-identical", true},
      {"toy-classes", "8", "8", "toy set: number of classes"},
      {"toy-per-class", "200", "200", "toy set: training images per class"},
      {"toy-size", "16", "16", "toy set: image side"},
      {"toy-seed", "0", "0", "toy set: generator seed"},
      {"train-per-class", "0", "0", "stratified training subset per class (0 = all)"},
      {"epochs", "20", "100", "SSL / supervised epochs"},
      {"batch-size", "64", "128", "images per batch before rotation"},
      {"lr", "0.1", "0.1", "base learning rate"},
      {"momentum", "0.9", "0.9", "SGD momentum"},
      {"weight-decay", "5e-4", "5e-4", "L2 weight decay"},
      {"snapshot-every", "auto", "20", "snapshot cadence in epochs ('auto' = 20% of the run)"},
      {"blocks", "4", "4", "conv blocks of the RotNet backbone"},
      {"width", "0.25", "1.0", "channel width multiplier"},
      {"rotations", "4", "4", "rotation task: 4, 8, 2a or 2b"},
      {"interpolation", "bilinear", "bilinear", "warp interpolation: nearest or bilinear"},
      {"hflip", "false", "false", "random horizontal flips before rotating", true},
      {"probe-epochs", "20", "100", "classifier epochs on top of a backbone"},
      {"hidden", "200", "200", "hidden units of the non-linear probe"},
      {"min-steps", "0", "0", "minimum SGD steps for classifier runs on small subsets"},
      {"checkpoint", "", "", "checkpoint file"},
      {"tap", "ConvB2", "ConvB2", "feature tap"},
      {"probe", "nonlinear", "nonlinear", "probe head: nonlinear or conv"},
      {"regime", "frozen", "frozen", "frozen or finetune"},
      {"target", "object", "object", "eval target: object or rotation"},
      {"tasks", "4,8,2a,2b", "4,8,2a,2b", "rotation tasks for the ablation"},
      {"depths", "3,4,5", "3,4,5", "backbone depths for the depth sweep"},
      {"sizes", "5,10,20,50,100,200", "20,100,400,1000,5000", "labelled images per class"},
      {"image", "0", "0", "test image index"},
      {"taps", "", "", "attention taps (default: every block)"},
      {"powers", "", "", "attention power per tap (default 1,2,4,...)"},
      {"scale", "4", "4", "pixel scale of emitted attention maps"},
      {"layer", "block1.conv1", "block1.conv1", "conv layer for the filter grid"},
  };
  return all;
}

const std::map<std::string, std::vector<std::string>>& command_fields() {
  static const std::vector<std::string> data{"data-dir", "toy-classes", "toy-per-class", "toy-size", "toy-seed",
                                             "train-per-class"};
  static const std::vector<std::string> sched{"epochs", "batch-size", "lr", "momentum", "weight-decay"};
  auto cat = [](std::initializer_list<std::vector<std::string>> parts) {
    std::vector<std::string> out;
    for (const auto& p : parts) out.insert(out.end(), p.begin(), p.end());
    return out;
  };
  static const std::map<std::string, std::vector<std::string>> table{
      {"make-toy", cat({{"toy-classes", "toy-per-class", "toy-size", "toy-seed"}})},
      {"train-ssl", cat({data, sched, {"snapshot-every", "blocks", "width", "rotations", "interpolation", "hflip"}})},
      {"train-probe",
       cat({data, {"probe-epochs", "batch-size", "lr", "momentum", "weight-decay", "checkpoint", "tap", "probe",
                   "regime", "hidden", "min-steps", "width"}})},
      {"train-supervised", cat({data, sched, {"blocks", "width", "hflip"}})},
      {"eval", cat({data, {"checkpoint", "target", "interpolation"}})},
      {"depth-sweep", cat({data, sched, {"probe-epochs", "depths", "width", "hidden", "min-steps"}})},
      {"rot-ablation",
       cat({data, sched, {"probe-epochs", "tasks", "blocks", "width", "hidden", "min-steps", "interpolation"}})},
      {"semisup-sweep",
       cat({data, sched, {"probe-epochs", "checkpoint", "sizes", "blocks", "width", "hidden", "min-steps"}})},
      {"correlation-curve",
       cat({data, sched, {"probe-epochs", "snapshot-every", "blocks", "width", "hidden", "tap", "min-steps"}})},
      {"attention", cat({data, {"checkpoint", "image", "taps", "powers", "scale"}})},
      {"filters", {"checkpoint", "layer"}},
  };
  return table;
}

const char* command_help(const std::string& name) {
  static const std::map<std::string, const char*> help{
      {"make-toy", "write the procedural toy dataset"},
      {"train-ssl", "train a RotNet on rotation prediction"},
      {"train-probe", "train a classifier on a backbone tap"},
      {"train-supervised", "train a RotNet-shaped classifier from scratch"},
      {"eval", "evaluate a checkpoint on the test split"},
      {"depth-sweep", "probe every tap of backbones of several depths"},
      {"rot-ablation", "compare rotation task sets"},
      {"semisup-sweep", "RotNet probe vs supervised over labelled-set sizes"},
      {"correlation-curve", "rotation accuracy vs probe accuracy over training"},
      {"attention", "attention maps of the rotated copies of one image"},
      {"filters", "first-layer filter grid"},
  };
  return help.at(name);
}

// Resolved option values for one run.
class Options {
 public:
  std::string command;
  std::map<std::string, std::string> values;
  bool full = false;

  const std::string& str(const std::string& key) const {
    const auto it = values.find(key);
    if (it == values.end()) throw std::logic_error("option not registered for command: " + key);
    return it->second;
  }
  int integer(const std::string& key) const { return parse<int>(key); }
  std::uint64_t u64(const std::string& key) const { return parse<std::uint64_t>(key); }
  double real(const std::string& key) const { return parse<double>(key); }
  bool flag(const std::string& key) const {
    const auto& v = str(key);
    if (v == "true" || v == "1") return true;
    if (v == "false" || v == "0") return false;
    throw UsageError("--" + key + ": expected true or false, got '" + v + "'");
  }
  std::vector<std::string> list(const std::string& key) const {
    std::vector<std::string> out;
    std::stringstream ss(str(key));
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (!item.empty()) out.push_back(item);
    }
    return out;
  }
  std::vector<int> int_list(const std::string& key) const {
    std::vector<int> out;
    for (const auto& s : list(key)) out.push_back(convert<int>(key, s));
    return out;
  }
  std::vector<double> real_list(const std::string& key) const {
    std::vector<double> out;
    for (const auto& s : list(key)) out.push_back(convert<double>(key, s));
    return out;
  }

  std::string echo() const {
    KeyValueFile file;
    file.set("command", command);
    file.set("full-reproduction", full ? "true" : "false");
    for (const auto& [k, v] : values) file.set(k, v);
    return "# rerun: rotssl " + command + " --config <this file>\n" + format_key_values(file);
  }

 private:
  template <typename T>
  static T convert(const std::string& key, const std::string& text) {
    T v{};
    std::istringstream in(text);
    in >> v;
    if (in.fail() || !in.eof()) throw UsageError("--" + key + ": bad value '" + text + "'");
    return v;
  }
  template <typename T>
  T parse(const std::string& key) const {
    return convert<T>(key, str(key));
  }
};

struct Run {
  Options opt;
  fs::path out;
  std::unique_ptr<MetricsWriter> metrics;

  MetricsSink sink() {
    if (!metrics) metrics = std::make_unique<MetricsWriter>(out / "metrics.txt", opt.flag("deterministic"));
    return metrics->sink();
  }
};

DatasetPair load_data(const Options& opt) {
  DatasetPair data;
  if (opt.str("data-dir") == "toy") {
    data = make_toy_dataset(opt.u64("toy-seed"), opt.integer("toy-per-class"), opt.integer("toy-size"),
                            opt.integer("toy-classes"));
  } else {
    data = load_dataset(opt.str("data-dir"));
  }
  if (const int per_class = opt.integer("train-per-class"); per_class > 0) {
    data.train = data.train.subset(stratified_subset(data.train, per_class, opt.u64("seed")));
  }
  return data;
}

TrainConfig schedule(const Options& opt, int epochs) {
  auto c = TrainConfig::scaled(epochs);
  c.batch_size = opt.integer("batch-size");
  c.base_lr = opt.real("lr");
  c.momentum = opt.real("momentum");
  c.weight_decay = opt.real("weight-decay");
  c.seed = opt.u64("seed");
  return c;
}

Interpolation interpolation(const Options& opt) {
  const auto& v = opt.str("interpolation");
  if (v == "nearest") return Interpolation::nearest;
  if (v == "bilinear") return Interpolation::bilinear;
  throw UsageError("--interpolation: expected nearest or bilinear, got '" + v + "'");
}

RotationTaskSpec task_named(const std::string& name) {
  try {
    return RotationTaskSpec::from_name(name);
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  }
}

HarnessConfig harness(Run& run) {
  const auto& opt = run.opt;
  HarnessConfig h;
  h.ssl = schedule(opt, opt.integer("epochs"));
  h.probe = schedule(opt, opt.integer("probe-epochs"));
  h.supervised = schedule(opt, opt.integer("epochs"));
  h.width = opt.real("width");
  h.probe_hidden = opt.integer("hidden");
  h.min_classifier_steps = opt.integer("min-steps");
  h.seed = opt.u64("seed");
  h.deterministic = opt.flag("deterministic");
  h.cache_dir = run.out / "cache";
  h.sink = run.sink();
  return h;
}

Checkpoint require_checkpoint(const Options& opt) {
  const auto& path = opt.str("checkpoint");
  if (path.empty()) throw UsageError("--checkpoint is required");
  return load_checkpoint(path);
}

void write_reports(Run& run, const std::vector<EvalReport>& reports) {
  write_text_atomic(run.out / "reports.txt", format_reports(reports));
  for (const auto& r : reports) std::cout << r.experiment << " accuracy=" << format_number(r.accuracy) << '\n';
}

std::vector<int> input_chw(const DatasetSplit& d) { return {d.channels, d.size, d.size}; }

void cmd_make_toy(Run& run) {
  const auto& opt = run.opt;
  const auto data = make_toy_dataset(opt.u64("toy-seed"), opt.integer("toy-per-class"), opt.integer("toy-size"),
                                     opt.integer("toy-classes"));
  save_dataset(run.out, data);
  std::cout << "wrote " << data.train.count() << " train and " << data.test.count() << " test images to "
            << run.out.string() << '\n';
}

void cmd_train_ssl(Run& run) {
  const auto& opt = run.opt;
  const auto data = load_data(opt);
  auto cfg = schedule(opt, opt.integer("epochs"));
  cfg.rotation_spec = task_named(opt.str("rotations"));
  cfg.interpolation = interpolation(opt);
  cfg.hflip = opt.flag("hflip");
  if (opt.str("snapshot-every") != "auto") cfg.snapshot_every = opt.integer("snapshot-every");
  auto model = build_rotnet(opt.integer("blocks"), cfg.rotation_spec.K, cfg.seed, opt.real("width"));
  auto result = train_ssl(data.train, std::move(model), cfg, run.sink());
  save_checkpoint(run.out / "final.ckpt", result.final);
  for (const auto& snap : result.snapshots) {
    save_checkpoint(run.out / ("snapshot_" + std::to_string(snap.epoch) + ".ckpt"), snap);
  }
  auto rot = evaluate_rotation(result.final.spec, result.final.state, data.test,
                               cfg.rotation_spec, *result.final.normalization, cfg.interpolation, "ssl/test");
  rot.config.emplace_back("rotations", cfg.rotation_spec.name);
  write_reports(run, {rot});
}

void cmd_train_probe(Run& run) {
  const auto& opt = run.opt;
  const auto data = load_data(opt);
  const auto backbone = require_checkpoint(opt);
  const auto& kind_name = opt.str("probe");
  if (kind_name != "nonlinear" && kind_name != "conv") throw UsageError("--probe: expected nonlinear or conv");
  const auto kind = kind_name == "conv" ? ProbeKind::conv : ProbeKind::nonlinear;
  const auto& regime_text = opt.str("regime");
  if (regime_text != "frozen" && regime_text != "finetune") throw UsageError("--regime: expected frozen or finetune");
  const auto regime = regime_text == "frozen" ? Regime::frozen_probe : Regime::finetune;
  auto probe = attach_probe(backbone.model(), opt.str("tap"), kind, data.train.num_classes(), input_chw(data.train),
                            opt.u64("seed") + 101, opt.real("width"), opt.integer("hidden"));
  auto train = data.train;
  train.normalization = backbone.normalization ? *backbone.normalization : compute_normalization(data.train);
  auto cfg = budget_for(schedule(opt, opt.integer("probe-epochs")), train.count(), opt.integer("min-steps"));
  cfg.experiment = "probe/" + opt.str("tap");
  auto result = train_classifier(train, std::move(probe.model), probe.backbone_end, regime, cfg, run.sink());
  save_checkpoint(run.out / "probe.ckpt", result.final);
  auto report = evaluate(result.final.spec, result.final.state, data.test, *train.normalization, cfg.experiment);
  report.config.emplace_back("tap", opt.str("tap"));
  report.config.emplace_back("probe", kind_name);
  report.config.emplace_back("regime", regime_text);
  write_reports(run, {report});
}

void cmd_train_supervised(Run& run) {
  const auto& opt = run.opt;
  const auto data = load_data(opt);
  auto cfg = schedule(opt, opt.integer("epochs"));
  cfg.hflip = opt.flag("hflip");
  cfg.experiment = "supervised";
  auto model = build_rotnet(opt.integer("blocks"), data.train.num_classes(), cfg.seed, opt.real("width"));
  auto result = train_classifier(data.train, std::move(model), 0, Regime::supervised, cfg, run.sink());
  save_checkpoint(run.out / "final.ckpt", result.final);
  write_reports(run, {evaluate(result.final.spec, result.final.state, data.test,
                               normalization_for(data.train), "supervised")});
}

void cmd_eval(Run& run) {
  const auto& opt = run.opt;
  auto ckpt = require_checkpoint(opt);
  const auto data = load_data(opt);
  const auto norm = ckpt.normalization ? *ckpt.normalization : compute_normalization(data.train);
  const auto& target = opt.str("target");
  EvalReport report;
  if (target == "rotation") {
    const auto task = TrainConfig::from_echo(ckpt.config_echo).rotation_spec;
    report = evaluate_rotation(ckpt.spec, ckpt.state, data.test, task, norm, interpolation(opt), "eval/rotation");
  } else if (target == "object") {
    report = evaluate(ckpt.spec, ckpt.state, data.test, norm, "eval/object");
  } else {
    throw UsageError("--target: expected object or rotation, got '" + target + "'");
  }
  report.config.emplace_back("checkpoint", opt.str("checkpoint"));
  write_reports(run, {report});
}

void cmd_depth_sweep(Run& run) {
  const auto data = load_data(run.opt);
  write_reports(run, depth_sweep(data, run.opt.int_list("depths"), harness(run)));
}

void cmd_rot_ablation(Run& run) {
  const auto& opt = run.opt;
  const auto data = load_data(opt);
  std::vector<RotationTaskSpec> tasks;
  for (const auto& name : opt.list("tasks")) tasks.push_back(task_named(name));
  auto h = harness(run);
  h.ssl.interpolation = interpolation(opt);
  write_reports(run, rotation_ablation(data, tasks, h, opt.integer("blocks")));
}

void cmd_semisup_sweep(Run& run) {
  const auto& opt = run.opt;
  const auto data = load_data(opt);
  auto h = harness(run);
  const auto backbone = opt.str("checkpoint").empty()
                            ? ssl_backbone(data.train, opt.integer("blocks"), RotationTaskSpec::four(), h, "semisup")
                            : require_checkpoint(opt);
  write_reports(run, semisup_sweep(data, backbone, opt.int_list("sizes"), h));
}

void cmd_correlation_curve(Run& run) {
  const auto& opt = run.opt;
  const auto data = load_data(opt);
  auto h = harness(run);
  auto cfg = h.ssl;
  if (opt.str("snapshot-every") != "auto") cfg.snapshot_every = opt.integer("snapshot-every");
  cfg.experiment = "ssl";
  auto model = build_rotnet(opt.integer("blocks"), cfg.rotation_spec.K, cfg.seed, h.width);
  const auto trained = train_ssl(data.train, std::move(model), cfg, h.sink);
  const auto points = correlation_curve(data, trained.snapshots, h, opt.str("tap"));
  std::vector<double> rot, obj;
  std::string text;
  for (const auto& p : points) {
    rot.push_back(p.rotation_acc);
    obj.push_back(p.object_acc);
    text += "epoch=" + std::to_string(p.epoch) + " rotation_acc=" + format_number(p.rotation_acc) +
            " object_acc=" + format_number(p.object_acc) + "\n";
  }
  const double rho = spearman(rot, obj);
  text += "spearman=" + format_number(rho) + "\n";
  write_text_atomic(run.out / "curve.txt", text);
  std::cout << text;
}

void cmd_attention(Run& run) {
  const auto& opt = run.opt;
  auto ckpt = require_checkpoint(opt);
  const auto data = load_data(opt);
  const auto index = opt.integer("image");
  if (index < 0 || static_cast<std::size_t>(index) >= data.test.count()) {
    throw UsageError("--image: index out of range");
  }
  std::vector<std::string> taps = opt.list("taps");
  if (taps.empty()) {
    for (const auto& t : ckpt.spec.taps) {
      if (t.name.rfind("ConvB", 0) == 0) taps.push_back(t.name);
    }
  }
  const auto powers = opt.real_list("powers");
  const auto norm = ckpt.normalization ? *ckpt.normalization : compute_normalization(data.train);
  const auto img = data.test.image(static_cast<std::size_t>(index));
  const auto reports = attention_rotation_report(ckpt.spec, ckpt.state, img, norm, taps, powers);
  const int scale = opt.integer("scale");
  std::string text;
  write_ppm(run.out / "image.ppm", img);
  for (const auto& r : reports) {
    for (int y = 0; y < 4; ++y) {
      const auto stem = "attention_" + r.tap + "_rot" + std::to_string(y * 90);
      write_ppm(run.out / (stem + ".ppm"), map_to_image(r.maps[y], scale));
      write_ppm(run.out / (stem + "_aligned.ppm"), map_to_image(r.aligned[y], scale));
      text += "tap=" + r.tap + " p=" + format_number(r.p) + " rotation=" + std::to_string(y * 90) +
              " size=" + std::to_string(r.maps[y].height) + "x" + std::to_string(r.maps[y].width) + " correlation=" +
              (r.correlation[y] ? format_number(*r.correlation[y]) : std::string("n/a")) + "\n";
    }
  }
  write_text_atomic(run.out / "attention.txt", text);
  std::cout << text;
}

void cmd_filters(Run& run) {
  const auto ckpt = require_checkpoint(run.opt);
  const auto grid = filter_grid(ckpt.state, run.opt.str("layer"));
  write_ppm(run.out / "filters.ppm", grid);
  std::cout << "wrote " << (run.out / "filters.ppm").string() << " (" << grid.width << "x" << grid.height << ")\n";
}

const std::map<std::string, std::function<void(Run&)>>& commands() {
  static const std::map<std::string, std::function<void(Run&)>> table{
      {"make-toy", cmd_make_toy},
      {"train-ssl", cmd_train_ssl},
      {"train-probe", cmd_train_probe},
      {"train-supervised", cmd_train_supervised},
      {"eval", cmd_eval},
      {"depth-sweep", cmd_depth_sweep},
      {"rot-ablation", cmd_rot_ablation},
      {"semisup-sweep", cmd_semisup_sweep},
      {"correlation-curve", cmd_correlation_curve},
      {"attention", cmd_attention},
      {"filters", cmd_filters},
  };
  return table;
}

const Field& field(const std::string& name) {
  for (const auto& f : fields()) {
    if (f.name == name) return f;
  }
  throw std::logic_error("unknown field " + name);
}

int run_cli(int argc, char** argv) {
  CLI::App app{"rotssl: rotation-prediction self-supervised learning"};
  app.require_subcommand(1);
  std::map<std::string, std::string> given;
  std::string config_path;
  bool full = false;
  std::map<std::string, CLI::App*> subs;
  for (const auto& [name, keys] : command_fields()) {
    auto* sub = app.add_subcommand(name, command_help(name));
    subs[name] = sub;
    sub->add_option("--config", config_path, "key=value file with option overrides");
    sub->add_flag("--full-reproduction", full, "full-scale schedules, widths and label-set sizes");
    const std::vector<std::string> common{"out-dir", "seed", "deterministic"};
    std::vector<std::string> all = common;
    all.insert(all.end(), keys.begin(), keys.end());
    for (const auto& key : all) {
      const auto& f = field(key);
      const auto help = f.help + " [" + (f.desk.empty() ? "none" : f.desk) + "]";
      if (f.flag) {
        sub->add_flag_function(
            "--" + key, [&given, key](std::int64_t) { given[key] = "true"; }, help);
      } else {
        sub->add_option_function<std::string>(
            "--" + key, [&given, key](const std::string& v) { given[key] = v; }, help);
      }
    }
  }
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }

  Run run;
  try {
    std::string name;
    for (const auto& [n, sub] : subs) {
      if (sub->parsed()) name = n;
    }
    run.opt.command = name;
    KeyValueFile file;
    if (!config_path.empty()) file = load_key_values(config_path);
    if (auto cmd = file.get("command"); cmd && *cmd != name) {
      throw UsageError("config file is for '" + *cmd + "', not '" + name + "'");
    }
    if (auto f = file.get("full-reproduction"); f && !full) full = (*f == "true" || *f == "1");
    run.opt.full = full;
    std::vector<std::string> keys{"out-dir", "seed", "deterministic"};
    const auto& extra = command_fields().at(name);
    keys.insert(keys.end(), extra.begin(), extra.end());
    for (const auto& [k, v] : file.entries) {
      if (k != "command" && k != "full-reproduction" && std::find(keys.begin(), keys.end(), k) == keys.end()) {
        throw UsageError("config key '" + k + "' does not apply to " + name);
      }
    }
    for (const auto& key : keys) {
      const auto& f = field(key);
      if (auto it = given.find(key); it != given.end()) {
        run.opt.values[key] = it->second;
      } else if (auto v = file.get(key)) {
        run.opt.values[key] = *v;
      } else {
        run.opt.values[key] = full ? f.full : f.desk;
      }
    }
    // Validate numeric options before any work starts.
    for (const auto& key : keys) {
      const auto& f = field(key);
      if (f.flag) run.opt.flag(key);
    }
    run.out = run.opt.str("out-dir");
    fs::create_directories(run.out);
    write_text_atomic(run.out / "config.echo", run.opt.echo());
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << app.help();
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }

  try {
    commands().at(run.opt.command)(run);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) { return run_cli(argc, argv); }
