// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include <cstring>
#include <filesystem>
#include <map>
#include <random>
#include <sstream>

#include "doctest.h"
#include "rotssl/checkpoint.hpp"
#include "rotssl/config.hpp"
#include "rotssl/dataset.hpp"
#include "rotssl/metrics.hpp"
#include "rotssl/model.hpp"

using namespace rotssl;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const auto dir = fs::temp_directory_path() / ("rotssl_unit_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::vector<std::uint8_t> random_records(std::mt19937_64& rng, std::size_t n) {
  std::uniform_int_distribution<int> byte(0, 255), label(0, 9);
  std::vector<std::uint8_t> out;
  for (std::size_t r = 0; r < n; ++r) {
    out.push_back(static_cast<std::uint8_t>(label(rng)));
    for (int i = 0; i < 3072; ++i) out.push_back(static_cast<std::uint8_t>(byte(rng)));
  }
  return out;
}

void write_bytes(const fs::path& p, const std::vector<std::uint8_t>& bytes) {
  std::ofstream out(p, std::ios::binary);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

// Splits "k=v k=v" without going through the library parser.
std::map<std::string, std::string> split_record(const std::string& line) {
  std::map<std::string, std::string> kv;
  std::istringstream in(line);
  std::string tok;
  while (in >> tok) {
    const auto eq = tok.find('=');
    REQUIRE(eq != std::string::npos);
    REQUIRE(kv.count(tok.substr(0, eq)) == 0);
    kv[tok.substr(0, eq)] = tok.substr(eq + 1);
  }
  return kv;
}

}  // namespace

TEST_CASE("CIFAR records: parse then serialize reproduces the bytes") {
  std::mt19937_64 rng(3);
  const auto bytes = random_records(rng, 20);
  const auto split = parse_label_records(bytes, 3, 32, 10, 20, "mem");
  CHECK(split.count() == 20);
  CHECK(split.labels[0] == bytes[0]);
  CHECK(split.image(0).at(0, 0, 0) == bytes[1]);
  CHECK(split.image(0).at(1, 0, 0) == bytes[1 + 1024]);
  CHECK(split.image(0).at(2, 31, 31) == bytes[3072]);
  CHECK(serialize_label_records(split) == bytes);
}

TEST_CASE("CIFAR directory: five train files plus test") {
  const auto dir = scratch_dir("cifar");
  std::mt19937_64 rng(5);
  std::vector<std::uint8_t> first;
  for (int i = 1; i <= 5; ++i) {
    const auto b = random_records(rng, 4);
    if (i == 1) first = b;
    write_bytes(dir / ("data_batch_" + std::to_string(i) + ".bin"), b);
  }
  write_bytes(dir / "test_batch.bin", random_records(rng, 4));
  const auto data = load_cifar10(dir, {.records_per_file = 4});
  CHECK(data.train.count() == 20);
  CHECK(data.test.count() == 4);
  CHECK(data.train.num_classes() == 10);
  const auto again = serialize_label_records(data.train);
  CHECK(std::equal(first.begin(), first.end(), again.begin()));

  SUBCASE("truncated file names expected and actual byte counts") {
    auto b = random_records(rng, 4);
    b.resize(b.size() - 100);
    write_bytes(dir / "data_batch_3.bin", b);
    try {
      load_cifar10(dir, {.records_per_file = 4});
      FAIL("no error");
    } catch (const ParseError& e) {
      const std::string what = e.what();
      CHECK(what.find("expected 12292 bytes") != std::string::npos);
      CHECK(what.find("got 12192") != std::string::npos);
      CHECK(what.find("data_batch_3.bin") != std::string::npos);
      CHECK(e.offset() == 12192);
    }
  }
  SUBCASE("label byte above 9 reports the record offset") {
    auto b = random_records(rng, 4);
    b[2 * 3073] = 10;
    write_bytes(dir / "data_batch_2.bin", b);
    try {
      load_cifar10(dir, {.records_per_file = 4});
      FAIL("no error");
    } catch (const ParseError& e) {
      CHECK(e.offset() == 2 * 3073);
    }
  }
  fs::remove_all(dir);
}

TEST_CASE("toy dataset: reproducible, uniform classes, learnable layout") {
  const auto a = make_toy_dataset(11, 20, 16, 8);
  const auto b = make_toy_dataset(11, 20, 16, 8);
  const auto c = make_toy_dataset(12, 20, 16, 8);
  CHECK(a.train.pixels == b.train.pixels);
  CHECK(a.train.labels == b.train.labels);
  CHECK(a.test.pixels == b.test.pixels);
  CHECK(a.train.pixels != c.train.pixels);
  std::vector<int> hist(8, 0);
  for (int l : a.train.labels) ++hist[l];
  CHECK(hist == std::vector<int>(8, 20));
  CHECK(a.train.size == 16);
  CHECK(a.train.channels == 3);
  CHECK(a.train.num_classes() == 8);
  CHECK_THROWS(make_toy_dataset(0, 4, 7, 4));
}

TEST_CASE("save_dataset / load_dataset round trip") {
  const auto dir = scratch_dir("toyset");
  const auto data = make_toy_dataset(1, 6, 12, 4);
  save_dataset(dir, data);
  const auto back = load_dataset(dir);
  CHECK(back.train.pixels == data.train.pixels);
  CHECK(back.test.labels == data.test.labels);
  CHECK(back.train.class_names == data.train.class_names);
  fs::remove_all(dir);
}

TEST_CASE("stratified subsets are balanced, seeded and sorted") {
  const auto data = make_toy_dataset(2, 30, 8, 5);
  const auto idx = stratified_subset(data.train, 7, 99);
  CHECK(idx.size() == 35);
  CHECK(std::is_sorted(idx.begin(), idx.end()));
  std::vector<int> hist(5, 0);
  for (auto i : idx) ++hist[data.train.labels[i]];
  CHECK(hist == std::vector<int>(5, 7));
  CHECK(stratified_subset(data.train, 7, 99) == idx);
  CHECK(stratified_subset(data.train, 7, 100) != idx);
  CHECK_THROWS_AS(stratified_subset(data.train, 31, 0), std::invalid_argument);
}

TEST_CASE("normalization statistics") {
  DatasetSplit s;
  s.channels = 1;
  s.size = 2;
  s.pixels = {0, 2, 4, 6};
  s.labels = {0};
  s.class_names = {"x"};
  const auto n = compute_normalization(s);
  CHECK(n.mean[0] == doctest::Approx(3));
  CHECK(n.stddev[0] == doctest::Approx(std::sqrt(5.0)));
}

TEST_CASE("metrics records: format, parse and an independent reader") {
  MetricsRecord r;
  r.experiment = "ssl/depth4";
  r.epoch = 3;
  r.step = 120;
  r.set("loss", 0.125);
  r.set("rotation_acc", 0.1 + 0.2);
  r.tags.emplace_back("status", "ok");
  const auto line = format_record(r);
  CHECK(line.find('\n') == std::string::npos);
  const auto kv = split_record(line);
  CHECK(kv.at("experiment") == "ssl/depth4");
  CHECK(kv.at("epoch") == "3");
  CHECK(kv.at("step") == "120");
  CHECK(std::stod(kv.at("rotation_acc")) == 0.1 + 0.2);
  CHECK(kv.at("status") == "ok");
  CHECK(kv.count("time") == 0);
  const auto back = parse_record(line);
  CHECK(back.get("loss") == 0.125);
  CHECK(format_record(back) == line);

  r.wall_time = 1.5;
  CHECK(split_record(format_record(r)).at("time") == "1.5");

  MetricsRecord bad = r;
  bad.experiment = "has space";
  CHECK_THROWS(format_record(bad));
}

TEST_CASE("metrics writer appends whole lines") {
  const auto dir = scratch_dir("metrics");
  {
    MetricsWriter w(dir / "m.txt", true);
    for (int e = 1; e <= 3; ++e) {
      MetricsRecord r;
      r.experiment = "x";
      r.epoch = e;
      r.set("loss", 1.0 / e);
      w.write(r);
    }
  }
  std::ifstream in(dir / "m.txt");
  std::string line;
  int count = 0, last_epoch = 0;
  while (std::getline(in, line)) {
    const auto kv = split_record(line);
    CHECK(std::stoi(kv.at("epoch")) >= last_epoch);
    last_epoch = std::stoi(kv.at("epoch"));
    ++count;
  }
  CHECK(count == 3);
  fs::remove_all(dir);
}

TEST_CASE("checkpoint round trip is bitwise") {
  auto model = build_rotnet(2, 4, 21, 0.25);
  // Give BN statistics non-default values.
  Tensor<float> x({2, 3, 16, 16}, 0.5f);
  x.data()[7] = -2;
  forward(model.spec, model.state, x, Mode::train);

  Checkpoint ckpt{model.spec, model.state.clone(), 7, "batch_size=8\n", "rng", Normalization{{1, 2, 3}, {4, 5, 6}}};
  const auto bytes = serialize_checkpoint(ckpt);
  CHECK(std::memcmp(bytes.data(), "RSSLCKPT", 8) == 0);
  auto back = deserialize_checkpoint(bytes);
  CHECK(serialize_checkpoint(back) == bytes);
  CHECK(back.epoch == 7);
  CHECK(back.config_echo == "batch_size=8\n");
  CHECK(back.normalization->stddev == std::vector<float>{4, 5, 6});
  for (const auto& [name, t] : model.state.parameters) {
    const auto a = t.data();
    const auto b = back.state.parameters.at(name).data();
    CHECK(std::memcmp(a.data(), b.data(), a.size_bytes()) == 0);
  }
  auto l1 = forward(model.spec, model.state, x, Mode::eval);
  auto l2 = forward(back.spec, back.state, x, Mode::eval);
  CHECK(std::memcmp(l1.data().data(), l2.data().data(), l1.data().size_bytes()) == 0);

  SUBCASE("corrupted magic") {
    auto broken = bytes;
    broken[0] = 'X';
    CHECK_THROWS_AS(deserialize_checkpoint(broken), CheckpointError);
  }
  SUBCASE("unknown version") {
    auto broken = bytes;
    broken[8] = 99;
    CHECK_THROWS_AS(deserialize_checkpoint(broken), CheckpointError);
  }
  SUBCASE("truncated and trailing bytes") {
    auto shorter = bytes;
    shorter.pop_back();
    CHECK_THROWS_AS(deserialize_checkpoint(shorter), CheckpointError);
    auto longer = bytes;
    longer.push_back(0);
    CHECK_THROWS_AS(deserialize_checkpoint(longer), CheckpointError);
  }
  SUBCASE("loading into a different architecture is a fingerprint error") {
    const auto dir = scratch_dir("ckpt");
    save_checkpoint(dir / "a.ckpt", ckpt);
    CHECK_NOTHROW(load_checkpoint(dir / "a.ckpt", model.spec));
    const auto other = build_rotnet(3, 4, 21, 0.25);
    try {
      load_checkpoint(dir / "a.ckpt", other.spec);
      FAIL("no error");
    } catch (const CheckpointError& e) {
      CHECK(std::string(e.what()).find("fingerprint") != std::string::npos);
    }
    CHECK_THROWS_AS(load_checkpoint(dir / "missing.ckpt"), CheckpointError);
    fs::remove_all(dir);
  }
}

TEST_CASE("key=value config files") {
  const auto f = parse_key_values("# comment\n epochs = 5 \n\nseed=7 # trailing\nepochs=6\n");
  CHECK(f.get("epochs") == "6");
  CHECK(f.get("seed") == "7");
  CHECK(!f.get("width"));
  CHECK(f.entries.size() == 2);
  CHECK(parse_key_values(format_key_values(f)).entries == f.entries);
  try {
    parse_key_values("a=1\nnot a pair\n", "x.cfg");
    FAIL("no error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("x.cfg:2") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_key_values("=3\n"), ConfigError);
}
