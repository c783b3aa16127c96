// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include <algorithm>
#include <cmath>
#include <numeric>
#include <cstring>
#include <random>

#include "doctest.h"
#include "loss_oracle.hpp"
#include "rotssl/evaluation.hpp"
#include "rotssl/training.hpp"

using namespace rotssl;

namespace {

ImageBatch random_batch(std::mt19937_64& rng, int n, int size) {
  std::uniform_int_distribution<int> byte(0, 255);
  ImageBatch b;
  for (int i = 0; i < n; ++i) {
    Image img(3, size, size);
    for (auto& p : img.pixels) p = static_cast<float>(byte(rng));
    b.push_back(img);
  }
  return b;
}

TrainConfig quick(int epochs, int batch) {
  auto c = TrainConfig::scaled(epochs);
  c.batch_size = batch;
  c.snapshot_every = 0;
  c.seed = 4;
  return c;
}

}  // namespace

TEST_CASE("step schedule") {
  TrainConfig c;
  CHECK(lr_at(c, 0) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(lr_at(c, 29) == doctest::Approx(0.1).epsilon(1e-12));
  CHECK(lr_at(c, 30) == doctest::Approx(0.02).epsilon(1e-12));
  CHECK(lr_at(c, 60) == doctest::Approx(0.004).epsilon(1e-12));
  CHECK(lr_at(c, 80) == doctest::Approx(0.0008).epsilon(1e-12));
  CHECK_THROWS_AS(lr_at(c, 100), std::out_of_range);
  CHECK_THROWS_AS(lr_at(c, -1), std::out_of_range);
  for (int e = 1; e < c.epochs; ++e) CHECK(lr_at(c, e) <= lr_at(c, e - 1));

  auto s = TrainConfig::scaled(20);
  CHECK(s.lr_drop_epochs == std::vector<int>{6, 12, 16});
  CHECK(s.snapshot_every == 4);
  CHECK(TrainConfig::scaled(100).lr_drop_epochs == c.lr_drop_epochs);

  TrainConfig bad;
  bad.lr_drop_epochs = {30, 30};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
  bad.lr_drop_epochs = {100};
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("train config echo round trip") {
  auto c = TrainConfig::scaled(12);
  c.rotation_spec = RotationTaskSpec::from_name("2b");
  c.hflip = true;
  c.seed = 99;
  const auto back = TrainConfig::from_echo(c.echo());
  CHECK(back.echo() == c.echo());
  CHECK(back.rotation_spec.name == "2b");
}

TEST_CASE("rotation loss matches the per-image unroll") {
  std::mt19937_64 rng(8);
  auto model = build_rotnet(2, 4, 5, 0.25);
  const Normalization norm{{120, 110, 100}, {60, 65, 70}};
  {
    NoGradGuard guard;
    testing::calibrate_batchnorm(model.spec, model.state, random_batch(rng, 8, 8), norm);
  }
  for (int trial = 0; trial < 5; ++trial) {
    const auto batch = random_batch(rng, 3, 8);
    NoGradGuard guard;
    const double lib = rotation_loss(model.spec, model.state, batch, RotationTaskSpec::four(), norm, Mode::eval).item();
    const double oracle = testing::brute_force_rotation_loss(model.spec, model.state, batch, norm);
    MESSAGE("loss " << lib << " oracle " << oracle);
    CHECK(std::abs(lib - oracle) < 1e-6);
  }
}

TEST_CASE("uniform logits give ln K") {
  std::mt19937_64 rng(2);
  for (const auto& name : {"4", "8", "2a"}) {
    const auto task = RotationTaskSpec::from_name(name);
    auto model = build_rotnet(2, task.K, 1, 0.25);
    for (auto& [pname, t] : model.state.parameters) {
      if (pname.rfind("head.fc", 0) == 0) std::fill(t.data().begin(), t.data().end(), 0.0f);
    }
    NoGradGuard guard;
    const double loss =
        rotation_loss(model.spec, model.state, random_batch(rng, 2, 8), task, {}, Mode::eval).item();
    CHECK(std::abs(loss - std::log(task.K)) < 1e-6);
  }
}

TEST_CASE("initial SSL loss sits near ln 4") {
  const auto data = make_toy_dataset(3, 16, 16, 8);
  auto model = build_rotnet(2, 4, 9, 0.25);
  const auto norm = compute_normalization(data.train);
  std::vector<std::size_t> idx(64);
  std::iota(idx.begin(), idx.end(), 0);
  NoGradGuard guard;
  const double loss =
      rotation_loss(model.spec, model.state, data.train.gather(idx), RotationTaskSpec::four(), norm, Mode::train).item();
  MESSAGE("initial loss " << loss);
  CHECK(std::abs(loss - std::log(4.0)) < 0.1);
}

TEST_CASE("two epochs on 64 toy images beat chance") {
  const auto data = make_toy_dataset(6, 8, 16, 8);
  REQUIRE(data.train.count() == 64);
  auto cfg = quick(2, 16);
  cfg.lr_drop_epochs.clear();
  const auto result = train_ssl(data.train, build_rotnet(2, 4, 6, 0.25), cfg);
  REQUIRE(result.records.size() == 2);
  CHECK(result.records.back().get("rotation_acc").value() > 0.25);
  CHECK(result.records[0].step == 4);
}

TEST_CASE("five toy epochs lower the loss by at least 10%") {
  const auto data = make_toy_dataset(7, 40, 16, 8);
  auto cfg = quick(5, 32);
  cfg.lr_drop_epochs.clear();
  const auto result = train_ssl(data.train, build_rotnet(2, 4, 7, 0.25), cfg);
  const double first = result.records.front().get("loss").value();
  const double last = result.records.back().get("loss").value();
  MESSAGE("epoch losses " << first << " -> " << last);
  CHECK(last <= 0.9 * std::log(4.0));
  CHECK(last < first);
}

TEST_CASE("snapshots and metrics records") {
  const auto data = make_toy_dataset(1, 4, 8, 4);
  auto cfg = quick(4, 8);
  cfg.snapshot_every = 2;
  std::vector<MetricsRecord> seen;
  const auto result = train_ssl(data.train, build_rotnet(1, 4, 1, 0.25), cfg,
                                [&](const MetricsRecord& r) { seen.push_back(r); });
  REQUIRE(result.snapshots.size() == 3);
  CHECK(result.snapshots[0].epoch == 0);
  CHECK(result.snapshots[2].epoch == 4);
  CHECK(seen.size() == 4);
  for (std::size_t i = 0; i < seen.size(); ++i) {
    CHECK(seen[i].epoch == static_cast<int>(i) + 1);
    CHECK(seen[i].get("lr").has_value());
  }
  CHECK(result.final.normalization.has_value());
}

TEST_CASE("frozen probe leaves backbone bytes and BN statistics alone") {
  const auto data = make_toy_dataset(2, 6, 16, 4);
  auto backbone = build_rotnet(2, 4, 3, 0.25);
  auto probe = attach_probe(backbone, "ConvB1", ProbeKind::nonlinear, 4, {3, 16, 16}, 5, 0.25, 16);
  const auto before = probe.model.state.clone();
  auto cfg = quick(2, 8);
  const auto result = train_classifier(data.train, probe.model, probe.backbone_end, Regime::frozen_probe, cfg);
  const auto& after = result.final.state;
  bool head_moved = false;
  for (const auto& [name, t] : before.parameters) {
    const auto a = t.data();
    const auto b = after.parameters.at(name).data();
    const bool same = std::memcmp(a.data(), b.data(), a.size_bytes()) == 0;
    if (name.rfind("block", 0) == 0) {
      CHECK_MESSAGE(same, name);
    } else if (!same) {
      head_moved = true;
    }
  }
  CHECK(head_moved);
  for (const auto& [name, s] : before.norm_states) {
    if (name.rfind("block", 0) != 0) continue;
    const auto& a = after.norm_states.at(name);
    CHECK(s.running_mean == a.running_mean);
    CHECK(s.running_var == a.running_var);
  }
  CHECK_THROWS_AS(train_classifier(data.train, probe.model, 0, Regime::frozen_probe, cfg), std::invalid_argument);
}

TEST_CASE("non-finite loss aborts with a status record") {
  const auto data = make_toy_dataset(1, 4, 8, 4);
  auto cfg = quick(2, 8);
  cfg.base_lr = 1e30;
  std::vector<MetricsRecord> seen;
  CHECK_THROWS_AS(train_ssl(data.train, build_rotnet(1, 4, 1, 0.25), cfg,
                            [&](const MetricsRecord& r) { seen.push_back(r); }),
                  TrainingAborted);
  REQUIRE(!seen.empty());
  bool aborted = false;
  for (const auto& [k, v] : seen.back().tags) aborted |= k == "status" && v == "aborted";
  CHECK(aborted);
}

TEST_CASE("reports from logits") {
  const std::vector<int> labels{0, 1, 2, 2};
  SUBCASE("perfect") {
    const std::vector<float> logits{5, 0, 0, 0, 5, 0, 0, 0, 5, 0, 0, 5};
    const auto r = report_from_logits(logits, 3, labels, "t");
    CHECK(r.accuracy == 1.0);
    CHECK(r.trace() == 4);
    CHECK(r.per_class == std::vector<double>{1, 1, 1});
  }
  SUBCASE("constant logits pick class 0") {
    const std::vector<float> logits(12, 1.0f);
    const auto r = report_from_logits(logits, 3, labels, "t");
    CHECK(r.accuracy == 0.25);
    CHECK(r.confusion[2][0] == 2);
    CHECK(r.per_class[1] == 0.0);
  }
  SUBCASE("text round trip and accuracy from confusion") {
    const std::vector<float> logits{1, 2, 0, 0, 3, 1, 0, 0, 4, 9, 0, 0};
    auto r = report_from_logits(logits, 3, labels, "depth/4/ConvB2");
    r.config.emplace_back("tap", "ConvB2");
    const auto back = parse_report(format_report(r));
    CHECK(back.experiment == r.experiment);
    CHECK(back.confusion == r.confusion);
    CHECK(back.accuracy == r.accuracy);
    CHECK(back.config_value("tap") == "ConvB2");
    CHECK(static_cast<double>(back.trace()) / static_cast<double>(back.total()) == back.accuracy);
    CHECK(parse_reports(format_reports({r, r})).size() == 2);
  }
  CHECK_THROWS(report_from_logits({}, 3, {}, "t"));
}

TEST_CASE("spearman rank correlation") {
  const std::vector<double> a{1, 2, 3, 4};
  const std::vector<double> b{10, 20, 30, 40};
  const std::vector<double> c{4, 3, 2, 1};
  const std::vector<double> flat{5, 5, 5, 5};
  CHECK(spearman(a, b) == doctest::Approx(1.0));
  CHECK(spearman(a, c) == doctest::Approx(-1.0));
  CHECK(spearman(a, flat) == 0.0);
  const std::vector<double> x{1, 2, 2, 3};
  const std::vector<double> y{1, 3, 2, 4};
  // ranks x: 1, 2.5, 2.5, 4; y: 1, 3, 2, 4
  CHECK(spearman(x, y) == doctest::Approx(4.5 / std::sqrt(4.5 * 5.0)));
}

TEST_CASE("budget_for raises epochs on small subsets") {
  auto base = TrainConfig::scaled(10);
  base.batch_size = 32;
  const auto b = budget_for(base, 64, 200);
  CHECK(b.epochs == 100);
  CHECK(b.lr_drop_epochs == std::vector<int>{30, 60, 80});
  CHECK(budget_for(base, 6400, 200).epochs == 10);
}
