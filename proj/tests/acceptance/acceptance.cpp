// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Acceptance criteria. Each criterion prints exactly one line
//   PASS <name>: <details>   or   FAIL <name>: <details>
// and the process exits non-zero if any selected criterion failed.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "kink_gradcheck.hpp"
#include "loss_oracle.hpp"
#include "rotssl/checkpoint.hpp"
#include "rotssl/evaluation.hpp"
#include "rotssl/introspection.hpp"
#include "rotssl/optim.hpp"
#include "rotssl/training.hpp"

#ifndef ROTSSL_CLI_PATH
#error "ROTSSL_CLI_PATH must name the rotssl executable"
#endif

namespace fs = std::filesystem;
using namespace rotssl;

namespace {

struct Outcome {
  bool pass = false;
  std::string details;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os.precision(digits);
  os << v;
  return os.str();
}

fs::path scratch(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rotssl_acceptance_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

template <typename T>
Tensor<T> random_tensor(Shape shape, std::mt19937_64& rng, double lo = -1, double hi = 1, bool grad = false) {
  std::uniform_real_distribution<double> u(lo, hi);
  Tensor<T> t(std::move(shape), T(0), grad);
  for (auto& v : t.data()) v = static_cast<T>(u(rng));
  return t;
}

Image random_image(std::mt19937_64& rng, int channels, int size) {
  std::uniform_int_distribution<int> byte(0, 255);
  Image img(channels, size, size);
  for (auto& p : img.pixels) p = static_cast<float>(byte(rng));
  return img;
}

ImageBatch random_batch(std::mt19937_64& rng, int n, int size) {
  ImageBatch b;
  for (int i = 0; i < n; ++i) b.push_back(random_image(rng, 3, size));
  return b;
}

// ---------------------------------------------------------------------------

Outcome rotation_algebra() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(2026);
  std::uniform_int_distribution<int> size_dist(1, 32), ch_dist(1, 3), turn_dist(-8, 8);
  int failures = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto img = random_image(rng, ch_dist(rng), size_dist(rng));
    const int a = turn_dist(rng), b = turn_dist(rng);
    const auto ra = rot90_exact(img, a);
    // composition
    if (rot90_exact(ra, b) != rot90_exact(img, a + b)) ++failures;
    // inverse
    if (rot90_exact(ra, -a) != img) ++failures;
    // period four
    if (rot90_exact(img, 4) != img) ++failures;
    // recipes
    if (rot90_exact(img, 1) != flip_vertical(transpose(img))) ++failures;
    if (rot90_exact(img, 2) != flip_horizontal(flip_vertical(img))) ++failures;
    if (rot90_exact(img, 3) != transpose(flip_vertical(img))) ++failures;
    // pixel multiset
    auto x = img.pixels, y = ra.pixels;
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    if (x != y) ++failures;
  }
  const double secs = seconds_since(t0);
  return {failures == 0 && secs < 10.0,
          "1000 images, " + std::to_string(failures) + " bitwise violations, " + fmt(secs, 3) + " s (limit 10 s)"};
}

Outcome gradient() {
  const auto t0 = std::chrono::steady_clock::now();
  std::mt19937_64 rng(7);
  std::map<std::string, double> errors;
  auto proj = [&](const Shape& s) { return random_tensor<double>(s, rng); };
  {
    auto x = random_tensor<double>({2, 2, 5, 5}, rng, -1, 1, true);
    auto w = random_tensor<double>({3, 2, 3, 3}, rng, -1, 1, true);
    auto b = random_tensor<double>({3}, rng, -1, 1, true);
    auto p = proj({2, 3, 3, 3});
    std::vector<Tensor<double>> params{x, w, b};
    errors["conv"] = finite_diff_gradcheck([&] { return sum(mul(conv2d(x, w, b, 2, 1), p)); }, std::span(params));
  }
  {
    auto x = random_tensor<double>({3, 2, 2, 2}, rng, -1, 1, true);
    auto g = random_tensor<double>({2}, rng, 0.5, 1.5, true);
    auto b = random_tensor<double>({2}, rng, -1, 1, true);
    auto p = proj({3, 2, 2, 2});
    std::vector<Tensor<double>> params{x, g, b};
    BatchNormState<double> st(2);
    errors["batchnorm-train"] =
        finite_diff_gradcheck([&] { return sum(mul(batch_norm(x, g, b, st, Mode::train), p)); }, std::span(params));
    st.running_mean = {0.3, -0.2};
    st.running_var = {0.7, 1.9};
    errors["batchnorm-eval"] =
        finite_diff_gradcheck([&] { return sum(mul(batch_norm(x, g, b, st, Mode::eval), p)); }, std::span(params));
  }
  {
    // Inputs at least 1e-2 from the kink.
    auto x = random_tensor<double>({24}, rng, 0.01, 1, true);
    for (std::size_t i = 0; i < x.size(); i += 2) x.data()[i] = -x.data()[i];
    auto p = proj({24});
    std::vector<Tensor<double>> params{x};
    errors["relu"] = finite_diff_gradcheck([&] { return sum(mul(relu(x), p)); }, std::span(params));
  }
  {
    // A shuffled ramp: every pair of values differs by more than 2*eps.
    Tensor<double> x({1, 2, 5, 5}, 0.0, true);
    std::vector<double> ramp(x.size());
    for (std::size_t i = 0; i < ramp.size(); ++i) ramp[i] = 0.01 * static_cast<double>(i);
    std::shuffle(ramp.begin(), ramp.end(), rng);
    std::copy(ramp.begin(), ramp.end(), x.data().begin());
    auto p = proj({1, 2, 3, 3});
    std::vector<Tensor<double>> params{x};
    errors["maxpool"] = finite_diff_gradcheck([&] { return sum(mul(max_pool2d(x, 3, 2, 1), p)); }, std::span(params));
  }
  {
    auto x = random_tensor<double>({2, 3, 2, 2}, rng, -1, 1, true);
    auto w = random_tensor<double>({3, 4}, rng, -1, 1, true);
    auto b = random_tensor<double>({4}, rng, -1, 1, true);
    auto w2 = random_tensor<double>({12, 4}, rng, -1, 1, true);
    const std::vector<int> labels{1, 3};
    std::vector<Tensor<double>> params{x, w, b, w2};
    errors["gap+flatten+dense+softmax-ce"] = finite_diff_gradcheck(
        [&] { return softmax_cross_entropy(add(dense(global_avg_pool(x), w, b), dense(flatten(x), w2, b)), labels); },
        std::span(params));
  }
  // Full 2-block RotNet loss, eval-mode BN with non-trivial statistics.
  auto model = build_rotnet(2, 4, 15);
  auto state = cast_state<double>(model.state);
  {
    std::uniform_real_distribution<double> mean(-0.3, 0.3), var(0.5, 2.0);
    for (auto& [name, ns] : state.norm_states) {
      for (auto& m : ns.running_mean) m = mean(rng);
      for (auto& v : ns.running_var) v = var(rng);
    }
    for (auto& w : state.parameters.at("head.fc.weight").data()) w *= 10.0;
  }
  auto x = random_tensor<double>({4, 3, 8, 8}, rng);
  const std::vector<int> labels{0, 1, 2, 3};
  const auto kink = testing::kink_aware_gradcheck(model.spec, state, x, labels, 1e-3, 12);
  errors["rotnet-2block"] = kink.max_rel_error;
  {
    // Second pass at eps 1e-6 covers every sampled coordinate, kinks included.
    auto params = parameter_list(model.spec, state, true);
    x.set_requires_grad(true);
    params.push_back(x);
    errors["rotnet-2block-eps1e-6"] = finite_diff_gradcheck(
        [&] { return softmax_cross_entropy(forward(model.spec, state, x, Mode::eval), std::span<const int>(labels)); },
        std::span(params), 1e-6, 12);
  }
  double worst = 0;
  std::string detail;
  for (const auto& [name, e] : errors) {
    worst = std::max(worst, e);
    detail += name + "=" + fmt(e, 2) + " ";
  }
  const double secs = seconds_since(t0);
  const bool ok = worst < 1e-4 && kink.checked >= 100 && secs < 120;
  return {ok, "float64, max rel error " + fmt(worst, 3) + " (limit 1e-4); " + detail +
                  "; rotnet coordinates checked " + std::to_string(kink.checked) + ", skipped at kinks " +
                  std::to_string(kink.skipped) + "; " + fmt(secs, 3) + " s (limit 120 s)"};
}

Outcome loss_oracle() {
  std::mt19937_64 rng(99);
  auto model = build_rotnet(2, 4, 3, 0.25);
  const Normalization norm{{125, 122, 113}, {62, 61, 66}};
  {
    NoGradGuard guard;
    testing::calibrate_batchnorm(model.spec, model.state, random_batch(rng, 16, 8), norm);
  }
  std::uniform_int_distribution<int> n_dist(1, 4);
  double worst = 0;
  for (int b = 0; b < 100; ++b) {
    const auto batch = random_batch(rng, n_dist(rng), 8);
    NoGradGuard guard;
    const double lib = rotation_loss(model.spec, model.state, batch, RotationTaskSpec::four(), norm, Mode::eval).item();
    worst = std::max(worst, std::abs(lib - testing::brute_force_rotation_loss(model.spec, model.state, batch, norm)));
  }
  double worst_uniform = 0;
  for (const auto& name : {"4", "8", "2a", "2b"}) {
    const auto task = RotationTaskSpec::from_name(name);
    auto m = build_rotnet(2, task.K, 1, 0.25);
    for (auto& [pname, t] : m.state.parameters) {
      if (pname.rfind("head.fc", 0) == 0) std::fill(t.data().begin(), t.data().end(), 0.0f);
    }
    NoGradGuard guard;
    const double loss = rotation_loss(m.spec, m.state, random_batch(rng, 2, 8), task, norm, Mode::eval).item();
    worst_uniform = std::max(worst_uniform, std::abs(loss - std::log(static_cast<double>(task.K))));
  }
  return {worst < 1e-6 && worst_uniform < 1e-6,
          "100 mini-batches, max |loss - unroll| " + fmt(worst, 3) + " (limit 1e-6); uniform logits max |loss - ln K| " +
              fmt(worst_uniform, 3) + " over K=4,8,2a,2b (limit 1e-6)"};
}

Outcome toy_learning() {
  const auto data = make_toy_dataset(0, 200, 16, 8);
  auto cfg = TrainConfig::scaled(5);
  cfg.batch_size = 16;
  cfg.snapshot_every = 0;
  const auto t0 = std::chrono::steady_clock::now();
  auto result = train_ssl(data.train, build_rotnet(2, 4, 0, 0.5), cfg);
  const double secs = seconds_since(t0);
  auto rot = evaluate_rotation(result.final.spec, result.final.state, data.test, RotationTaskSpec::four(),
                               *result.final.normalization);
  const double train_acc = result.records.back().get("rotation_acc").value();
  return {rot.accuracy >= 0.90 && secs < 300,
          "2-block RotNet (width 0.5, batch 16), 5 epochs: held-out rotation accuracy " + fmt(rot.accuracy) +
              " (need >= 0.90), last-epoch train accuracy " + fmt(train_acc) + ", " + fmt(secs, 3) +
              " s single-threaded (limit 300 s)"};
}

// Desk protocol shared by the toy trend criteria.
struct ToyProtocol {
  int per_class = 200;
  int size = 16;
  int classes = 8;
  int blocks = 4;
  double width = 0.25;
  int ssl_epochs = 10;
  int probe_epochs = 10;
  int batch = 32;
  int min_classifier_steps = 200;
};

HarnessConfig toy_harness(const ToyProtocol& p, std::uint64_t seed) {
  HarnessConfig h;
  h.width = p.width;
  h.seed = seed;
  h.min_classifier_steps = p.min_classifier_steps;
  h.ssl = TrainConfig::scaled(p.ssl_epochs);
  h.ssl.batch_size = p.batch;
  h.probe = TrainConfig::scaled(p.probe_epochs);
  h.probe.batch_size = p.batch;
  h.supervised = h.probe;
  return h;
}

DatasetPair normalized(DatasetPair d) {
  const auto norm = compute_normalization(d.train);
  d.train.normalization = norm;
  d.test.normalization = norm;
  return d;
}

Outcome feature_quality() {
  const ToyProtocol p;
  const auto data = normalized(make_toy_dataset(0, p.per_class, p.size, p.classes));
  const auto h = toy_harness(p, 0);
  const auto ssl = ssl_backbone(data.train, p.blocks, RotationTaskSpec::four(), h, "features");
  const auto trained = frozen_probe_report(data, ssl.model(), "ConvB2", ProbeKind::conv, "features/rotnet", h.probe, h);
  const auto random = frozen_probe_report(data, build_rotnet(p.blocks, 4, h.seed, p.width), "ConvB2", ProbeKind::conv,
                                          "features/random", h.probe, h);
  const double gap = 100.0 * (trained.accuracy - random.accuracy);
  return {gap >= 10.0, "ConvB2 conv probe: RotNet features " + fmt(trained.accuracy) + ", random-init features " +
                           fmt(random.accuracy) + ", gap " + fmt(gap, 3) + " pp (need >= 10 pp, same probe budget " +
                           std::to_string(p.probe_epochs) + " epochs)"};
}

Outcome semisup_crossover() {
  const ToyProtocol p;
  const int smallest = 5;
  int wins = 0;
  std::string detail;
  for (std::uint64_t seed : {0, 1, 2}) {
    const auto data = normalized(make_toy_dataset(seed, p.per_class, p.size, p.classes));
    auto h = toy_harness(p, seed);
    const auto ssl = ssl_backbone(data.train, p.blocks, RotationTaskSpec::four(), h, "semisup");
    const auto reports = semisup_sweep(data, ssl, {smallest}, h);
    const double probe = reports.at(0).accuracy, sup = reports.at(1).accuracy;
    wins += probe >= sup ? 1 : 0;
    detail += " seed " + std::to_string(seed) + ": probe " + fmt(probe) + " vs supervised " + fmt(sup) + ";";
  }
  return {wins >= 2, std::to_string(smallest) + " labels/class, RotNet-probe >= supervised in " + std::to_string(wins) +
                         "/3 seeds (need 2):" + detail};
}

Outcome depth_sweep_trend() {
  const char* env = std::getenv("ROTSSL_CIFAR_DIR");
  const fs::path dir = env ? fs::path(env) : fs::path(ROTSSL_SOURCE_DIR) / "data" / "cifar-10-batches-bin";
  if (!fs::exists(dir / "data_batch_1.bin")) {
    return {false, "CIFAR-10 binary batches not found at " + dir.string() +
                       " (set ROTSSL_CIFAR_DIR); criterion needs the real dataset and was not run"};
  }
  int holds = 0;
  std::string detail;
  for (std::uint64_t seed : {0, 1, 2}) {
    auto data = load_cifar10(dir);
    data.train = data.train.subset(stratified_subset(data.train, 500, seed));
    data = normalized(std::move(data));
    HarnessConfig h;
    h.seed = seed;
    h.width = 0.25;
    h.ssl = TrainConfig::scaled(20);
    h.probe = TrainConfig::scaled(20);
    const auto reports = depth_sweep(data, {4}, h);
    double b2 = 0, deepest = 0;
    for (const auto& r : reports) {
      if (r.experiment == "depth/4/ConvB2") b2 = r.accuracy;
      if (r.experiment == "depth/4/ConvB4") deepest = r.accuracy;
    }
    holds += deepest <= b2 ? 1 : 0;
    detail += " seed " + std::to_string(seed) + ": ConvB2 " + fmt(b2) + " ConvB4 " + fmt(deepest) + ";";
  }
  return {holds >= 2, "5000 CIFAR train images, 20 SSL epochs, deepest <= ConvB2 in " + std::to_string(holds) +
                          "/3 seeds:" + detail};
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(ROTSSL_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::uint8_t> bytes_of(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Outcome determinism() {
  const auto dir = scratch("determinism");
  const std::string common = "train-ssl --data-dir toy --epochs 2 --seed 7 --deterministic --blocks 2 --toy-per-class 24";
  const int a = run_cli(common + " --out-dir " + (dir / "a").string());
  const int b = run_cli(common + " --out-dir " + (dir / "b").string());
  // Rerun from the config echo alone.
  const int c = run_cli("train-ssl --config " + (dir / "a" / "config.echo").string() + " --out-dir " +
                        (dir / "c").string());
  if (a != 0 || b != 0 || c != 0) {
    return {false, "CLI exit codes " + std::to_string(a) + "/" + std::to_string(b) + "/" + std::to_string(c)};
  }
  int compared = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(dir / "a")) {
    const auto name = entry.path().filename();
    if (name == "config.echo") continue;
    for (const auto* other : {"b", "c"}) {
      ++compared;
      if (!fs::exists(dir / other / name) || bytes_of(entry.path()) != bytes_of(dir / other / name)) ++differing;
    }
  }
  const bool has_metrics = fs::file_size(dir / "a" / "metrics.txt") > 0;
  fs::remove_all(dir);
  return {differing == 0 && compared >= 8 && has_metrics,
          "two seeded train-ssl runs plus a rerun from config.echo: " + std::to_string(compared) +
              " file comparisons (metrics, checkpoints, reports), " + std::to_string(differing) + " differ"};
}

// Minimal P6 reader written against the format description only.
struct Pixmap {
  int width = 0, height = 0, maxval = 0;
  std::vector<std::uint8_t> rgb;
};

bool read_pixmap(const fs::path& path, Pixmap& out) {
  std::ifstream in(path, std::ios::binary);
  std::string magic;
  in >> magic >> out.width >> out.height >> out.maxval;
  if (!in || magic != "P6" || out.width <= 0 || out.height <= 0 || out.maxval != 255) return false;
  in.get();
  out.rgb.resize(static_cast<std::size_t>(out.width) * out.height * 3);
  in.read(reinterpret_cast<char*>(out.rgb.data()), static_cast<std::streamsize>(out.rgb.size()));
  if (in.gcount() != static_cast<std::streamsize>(out.rgb.size())) return false;
  return in.peek() == std::char_traits<char>::eof();
}

Outcome io_bitexact() {
  const auto dir = scratch("io");
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> byte(0, 255), label(0, 9);
  // Full-size CIFAR-10 layout: five 10000-record train files and a test file.
  std::vector<std::string> files{"data_batch_1.bin", "data_batch_2.bin", "data_batch_3.bin",
                                 "data_batch_4.bin", "data_batch_5.bin", "test_batch.bin"};
  for (const auto& f : files) {
    std::vector<std::uint8_t> bytes(10000 * 3073);
    for (std::size_t r = 0; r < 10000; ++r) {
      bytes[r * 3073] = static_cast<std::uint8_t>(label(rng));
      for (std::size_t i = 1; i < 3073; ++i) bytes[r * 3073 + i] = static_cast<std::uint8_t>(byte(rng));
    }
    write_file_atomic(dir / f, bytes);
  }
  const auto data = load_cifar10(dir);
  bool cifar_ok = data.train.count() == 50000 && data.test.count() == 10000;
  const auto train_bytes = serialize_label_records(data.train);
  for (int i = 0; i < 5 && cifar_ok; ++i) {
    const auto src = bytes_of(dir / files[i]);
    cifar_ok = std::equal(src.begin(), src.end(), train_bytes.begin() + static_cast<std::ptrdiff_t>(i) * 10000 * 3073);
  }
  cifar_ok = cifar_ok && serialize_label_records(data.test) == bytes_of(dir / "test_batch.bin");
  for (const auto& f : files) fs::remove(dir / f);

  // Checkpoint: save, load, compare every tensor and the eval logits bitwise.
  auto model = build_rotnet(3, 4, 5, 0.25);
  auto x = random_tensor<float>({2, 3, 16, 16}, rng);
  forward(model.spec, model.state, x, Mode::train);
  Checkpoint ckpt{model.spec, model.state.clone(), 3, "batch_size=32\n", "rng", Normalization{{1, 2, 3}, {4, 5, 6}}};
  save_checkpoint(dir / "m.ckpt", ckpt);
  auto back = load_checkpoint(dir / "m.ckpt", model.spec);
  bool ckpt_ok = bytes_of(dir / "m.ckpt") == serialize_checkpoint(back);
  for (const auto& [name, t] : model.state.parameters) {
    const auto a = t.data();
    const auto b = back.state.parameters.at(name).data();
    ckpt_ok = ckpt_ok && a.size() == b.size() && std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
  }
  for (const auto& [name, s] : model.state.norm_states) {
    ckpt_ok = ckpt_ok && s.running_mean == back.state.norm_states.at(name).running_mean &&
              s.running_var == back.state.norm_states.at(name).running_var;
  }
  const auto l1 = forward(model.spec, model.state, x, Mode::eval);
  const auto l2 = forward(back.spec, back.state, x, Mode::eval);
  ckpt_ok = ckpt_ok && std::memcmp(l1.data().data(), l2.data().data(), l1.data().size_bytes()) == 0;

  // Pixmaps written by the CLI, read back with the local reader.
  const auto ck = (dir / "m.ckpt").string();
  const int att = run_cli("attention --checkpoint " + ck + " --data-dir toy --toy-per-class 4 --out-dir " +
                          (dir / "att").string());
  const int fil = run_cli("filters --checkpoint " + ck + " --out-dir " + (dir / "fil").string());
  int pixmaps = 0, good = 0;
  for (const auto* sub : {"att", "fil"}) {
    if (!fs::exists(dir / sub)) continue;
    for (const auto& e : fs::directory_iterator(dir / sub)) {
      if (e.path().extension() != ".ppm") continue;
      ++pixmaps;
      Pixmap pm;
      good += read_pixmap(e.path(), pm) ? 1 : 0;
    }
  }
  const auto& w1 = model.state.parameters.at("block1.conv1.weight");
  const int filters = static_cast<int>(w1.dim(0)), k = static_cast<int>(w1.dim(3));
  const int cols = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(filters))));
  const int rows = (filters + cols - 1) / cols;
  Pixmap grid;
  const bool grid_ok = read_pixmap(dir / "fil" / "filters.ppm", grid) && grid.width == cols * (k + 1) + 1 &&
                       grid.height == rows * (k + 1) + 1;
  fs::remove_all(dir);
  const bool pix_ok = att == 0 && fil == 0 && pixmaps >= 10 && good == pixmaps && grid_ok;
  return {cifar_ok && ckpt_ok && pix_ok,
          std::string("CIFAR 6x10000-record round trip ") + (cifar_ok ? "bitwise" : "MISMATCH") + "; checkpoint " +
              (ckpt_ok ? "bitwise (tensors, BN stats, logits)" : "MISMATCH") + "; pixmaps " + std::to_string(good) +
              "/" + std::to_string(pixmaps) + " parsed by an independent reader, filter grid " +
              (grid_ok ? "has the expected size" : "WRONG SIZE")};
}

Outcome correlation_curve_sanity() {
  const ToyProtocol p;
  const auto data = normalized(make_toy_dataset(0, p.per_class, p.size, p.classes));
  auto h = toy_harness(p, 0);
  auto cfg = TrainConfig::scaled(40);
  cfg.batch_size = p.batch;
  cfg.snapshot_every = 10;
  const auto trained = train_ssl(data.train, build_rotnet(p.blocks, 4, 0, p.width), cfg);
  const auto points = correlation_curve(data, trained.snapshots, h, "ConvB2");
  std::vector<double> rot, obj;
  std::string detail;
  for (const auto& pt : points) {
    rot.push_back(pt.rotation_acc);
    obj.push_back(pt.object_acc);
    detail += " e" + std::to_string(pt.epoch) + " rot " + fmt(pt.rotation_acc, 3) + " obj " + fmt(pt.object_acc, 3) + ";";
  }
  const double rho = spearman(rot, obj);
  return {points.size() == 5 && rho > 0,
          "40 SSL epochs, snapshots every 10, Spearman " + fmt(rho, 3) + " (need > 0):" + detail};
}

const std::vector<std::pair<std::string, std::function<Outcome()>>>& criteria() {
  static const std::vector<std::pair<std::string, std::function<Outcome()>>> all{
      {"rotation-algebra", rotation_algebra},
      {"gradient", gradient},
      {"loss-oracle", loss_oracle},
      {"toy-learning", toy_learning},
      {"feature-quality", feature_quality},
      {"semisup-crossover", semisup_crossover},
      {"depth-sweep", depth_sweep_trend},
      {"determinism", determinism},
      {"io-bitexact", io_bitexact},
      {"correlation-curve", correlation_curve_sanity},
  };
  return all;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"rotssl acceptance criteria"};
  std::vector<std::string> selected;
  bool list = false;
  app.add_option("--criterion", selected, "criterion to run (repeatable; default all)");
  app.add_flag("--list", list, "list criterion names");
  CLI11_PARSE(app, argc, argv);
  if (list) {
    for (const auto& [name, fn] : criteria()) std::cout << name << '\n';
    return 0;
  }
  int failed = 0;
  for (const auto& [name, fn] : criteria()) {
    if (!selected.empty() && std::find(selected.begin(), selected.end(), name) == selected.end()) continue;
    Outcome o;
    try {
      o = fn();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.details << std::endl;
    failed += o.pass ? 0 : 1;
  }
  for (const auto& s : selected) {
    if (std::none_of(criteria().begin(), criteria().end(), [&](const auto& c) { return c.first == s; })) {
      std::cerr << "unknown criterion " << s << '\n';
      return 1;
    }
  }
  return failed == 0 ? 0 : 1;
}
