// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

namespace rotssl {

namespace fs = std::filesystem;

Image DatasetSplit::image(std::size_t index) const {
  if (index >= count()) throw std::out_of_range("DatasetSplit::image index out of range");
  Image img(channels, size, size, ValueRange::raw_bytes);
  const auto* src = pixels.data() + index * image_bytes();
  for (std::size_t i = 0; i < image_bytes(); ++i) img.pixels[i] = src[i];
  return img;
}

ImageBatch DatasetSplit::gather(std::span<const std::size_t> indices) const {
  ImageBatch batch;
  batch.count = static_cast<int>(indices.size());
  batch.channels = channels;
  batch.height = size;
  batch.width = size;
  batch.range = ValueRange::raw_bytes;
  batch.pixels.resize(indices.size() * image_bytes());
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] >= count()) throw std::out_of_range("DatasetSplit::gather index out of range");
    const auto* src = pixels.data() + indices[k] * image_bytes();
    float* dst = batch.pixels.data() + k * image_bytes();
    for (std::size_t i = 0; i < image_bytes(); ++i) dst[i] = src[i];
  }
  return batch;
}

DatasetSplit DatasetSplit::subset(std::span<const std::size_t> indices) const {
  DatasetSplit out;
  out.channels = channels;
  out.size = size;
  out.class_names = class_names;
  out.split = split;
  out.normalization = normalization;
  out.pixels.reserve(indices.size() * image_bytes());
  for (auto idx : indices) {
    if (idx >= count()) throw std::out_of_range("DatasetSplit::subset index out of range");
    const auto begin = pixels.begin() + static_cast<std::ptrdiff_t>(idx * image_bytes());
    out.pixels.insert(out.pixels.end(), begin, begin + static_cast<std::ptrdiff_t>(image_bytes()));
    out.labels.push_back(labels[idx]);
  }
  return out;
}

void DatasetSplit::validate() const {
  if (pixels.size() != count() * image_bytes()) throw std::invalid_argument("dataset: pixel bytes do not match record count");
  for (int label : labels) {
    if (label < 0 || label >= num_classes()) throw std::invalid_argument("dataset: label outside [0, num_classes)");
  }
}

std::vector<std::string> cifar10_class_names() {
  return {"airplane", "automobile", "bird", "cat", "deer", "dog", "frog", "horse", "ship", "truck"};
}

DatasetSplit parse_label_records(std::span<const std::uint8_t> bytes, int channels, int size, int num_classes,
                                 std::size_t expected_records, const std::string& source) {
  const std::size_t image = static_cast<std::size_t>(channels) * size * size;
  const std::size_t record = image + 1;
  if (expected_records != 0 && bytes.size() != expected_records * record) {
    throw ParseError(source + ": expected " + std::to_string(expected_records * record) + " bytes (" +
                         std::to_string(expected_records) + " records of " + std::to_string(record) +
                         "), got " + std::to_string(bytes.size()),
                     std::min(bytes.size(), expected_records * record));
  }
  if (bytes.size() % record != 0) {
    throw ParseError(source + ": length " + std::to_string(bytes.size()) + " is not a multiple of the " +
                         std::to_string(record) + "-byte record size",
                     bytes.size() - bytes.size() % record);
  }
  DatasetSplit out;
  out.channels = channels;
  out.size = size;
  for (int c = 0; c < num_classes; ++c) out.class_names.push_back(std::to_string(c));
  const std::size_t n = bytes.size() / record;
  out.labels.reserve(n);
  out.pixels.reserve(n * image);
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t offset = r * record;
    const int label = bytes[offset];
    if (label >= num_classes) {
      throw ParseError(source + ": label byte " + std::to_string(label) + " exceeds " + std::to_string(num_classes - 1),
                       offset);
    }
    out.labels.push_back(label);
    out.pixels.insert(out.pixels.end(), bytes.begin() + static_cast<std::ptrdiff_t>(offset + 1),
                      bytes.begin() + static_cast<std::ptrdiff_t>(offset + record));
  }
  return out;
}

std::vector<std::uint8_t> serialize_label_records(const DatasetSplit& split) {
  split.validate();
  std::vector<std::uint8_t> out;
  out.reserve(split.count() * (split.image_bytes() + 1));
  for (std::size_t r = 0; r < split.count(); ++r) {
    out.push_back(static_cast<std::uint8_t>(split.labels[r]));
    const auto begin = split.pixels.begin() + static_cast<std::ptrdiff_t>(r * split.image_bytes());
    out.insert(out.end(), begin, begin + static_cast<std::ptrdiff_t>(split.image_bytes()));
  }
  return out;
}

std::vector<std::uint8_t> read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

void write_file_atomic(const fs::path& path, std::span<const std::uint8_t> bytes) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  fs::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path);
}

void write_text_atomic(const fs::path& path, const std::string& text) {
  write_file_atomic(path, std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

namespace {

DatasetSplit concat(std::vector<DatasetSplit> parts) {
  DatasetSplit out = std::move(parts.front());
  for (std::size_t i = 1; i < parts.size(); ++i) {
    out.pixels.insert(out.pixels.end(), parts[i].pixels.begin(), parts[i].pixels.end());
    out.labels.insert(out.labels.end(), parts[i].labels.begin(), parts[i].labels.end());
  }
  return out;
}

std::map<std::string, std::string> read_meta(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos || line.empty() || line[0] == '#') continue;
    kv[line.substr(0, eq)] = line.substr(eq + 1);
  }
  return kv;
}

}  // namespace

DatasetPair load_cifar10(const fs::path& dir, const CifarLoadOptions& options) {
  std::vector<DatasetSplit> train_parts;
  for (int i = 1; i <= 5; ++i) {
    const auto path = dir / ("data_batch_" + std::to_string(i) + ".bin");
    const auto bytes = read_file(path);
    train_parts.push_back(parse_label_records(bytes, 3, 32, 10, options.records_per_file, path.string()));
  }
  const auto test_path = dir / "test_batch.bin";
  const auto test_bytes = read_file(test_path);
  DatasetPair pair{concat(std::move(train_parts)),
                   parse_label_records(test_bytes, 3, 32, 10, options.records_per_file, test_path.string())};
  pair.train.class_names = pair.test.class_names = cifar10_class_names();
  pair.train.split = Split::train;
  pair.test.split = Split::test;
  return pair;
}

void save_dataset(const fs::path& dir, const DatasetPair& data) {
  fs::create_directories(dir);
  std::ostringstream meta;
  meta << "format=rotssl-records\n"
       << "channels=" << data.train.channels << "\n"
       << "size=" << data.train.size << "\n"
       << "classes=";
  for (std::size_t i = 0; i < data.train.class_names.size(); ++i) meta << (i ? "," : "") << data.train.class_names[i];
  meta << "\n";
  write_file_atomic(dir / "train.bin", serialize_label_records(data.train));
  write_file_atomic(dir / "test.bin", serialize_label_records(data.test));
  write_text_atomic(dir / "meta.txt", meta.str());
}

DatasetPair load_dataset(const fs::path& dir) {
  if (!fs::exists(dir / "meta.txt")) return load_cifar10(dir);
  const auto meta = read_meta(dir / "meta.txt");
  auto get = [&](const std::string& key) {
    auto it = meta.find(key);
    if (it == meta.end()) throw std::runtime_error(dir.string() + "/meta.txt: missing '" + key + "'");
    return it->second;
  };
  if (get("format") != "rotssl-records") throw std::runtime_error(dir.string() + ": unknown dataset format");
  const int channels = std::stoi(get("channels"));
  const int size = std::stoi(get("size"));
  std::vector<std::string> names;
  std::stringstream ss(get("classes"));
  for (std::string name; std::getline(ss, name, ',');) names.push_back(name);
  const int classes = static_cast<int>(names.size());
  DatasetPair pair{parse_label_records(read_file(dir / "train.bin"), channels, size, classes, 0, "train.bin"),
                   parse_label_records(read_file(dir / "test.bin"), channels, size, classes, 0, "test.bin")};
  pair.train.class_names = pair.test.class_names = names;
  pair.train.split = Split::train;
  pair.test.split = Split::test;
  return pair;
}

Normalization compute_normalization(const DatasetSplit& split) {
  Normalization norm;
  const std::size_t plane = static_cast<std::size_t>(split.size) * split.size;
  for (int c = 0; c < split.channels; ++c) {
    double s = 0, sq = 0;
    for (std::size_t r = 0; r < split.count(); ++r) {
      const auto* p = split.pixels.data() + r * split.image_bytes() + c * plane;
      for (std::size_t i = 0; i < plane; ++i) {
        s += p[i];
        sq += static_cast<double>(p[i]) * p[i];
      }
    }
    const double n = static_cast<double>(plane * split.count());
    const double mean = s / n;
    const double var = std::max(sq / n - mean * mean, 0.0);
    norm.mean.push_back(static_cast<float>(mean));
    norm.stddev.push_back(static_cast<float>(std::max(std::sqrt(var), 1e-3)));
  }
  return norm;
}

void normalize_in_place(ImageBatch& batch, const Normalization& norm) {
  if (static_cast<int>(norm.mean.size()) != batch.channels) throw std::invalid_argument("normalization channel count mismatch");
  const std::size_t plane = static_cast<std::size_t>(batch.height) * batch.width;
  for (int n = 0; n < batch.count; ++n) {
    for (int c = 0; c < batch.channels; ++c) {
      float* p = batch.pixels.data() + (static_cast<std::size_t>(n) * batch.channels + c) * plane;
      const float m = norm.mean[c];
      const float inv = 1.0f / norm.stddev[c];
      for (std::size_t i = 0; i < plane; ++i) p[i] = (p[i] - m) * inv;
    }
  }
  batch.range = ValueRange::normalized;
}

Tensor<float> to_tensor(const ImageBatch& batch) {
  return Tensor<float>({batch.count, batch.channels, batch.height, batch.width}, batch.pixels);
}

std::vector<std::size_t> stratified_subset(const DatasetSplit& split, int per_class, std::uint64_t seed) {
  if (per_class <= 0) throw std::invalid_argument("stratified_subset: per_class must be positive");
  std::mt19937_64 rng(seed);
  std::vector<std::vector<std::size_t>> reservoirs(static_cast<std::size_t>(split.num_classes()));
  std::vector<std::size_t> seen(reservoirs.size(), 0);
  for (std::size_t i = 0; i < split.count(); ++i) {
    const auto c = static_cast<std::size_t>(split.labels[i]);
    auto& res = reservoirs[c];
    const std::size_t k = seen[c]++;
    if (res.size() < static_cast<std::size_t>(per_class)) {
      res.push_back(i);
    } else {
      const std::size_t j = std::uniform_int_distribution<std::size_t>(0, k)(rng);
      if (j < res.size()) res[j] = i;
    }
  }
  std::vector<std::size_t> out;
  for (std::size_t c = 0; c < reservoirs.size(); ++c) {
    if (reservoirs[c].size() < static_cast<std::size_t>(per_class)) {
      throw std::invalid_argument("stratified_subset: class " + std::to_string(c) + " has only " +
                                  std::to_string(reservoirs[c].size()) + " examples, " + std::to_string(per_class) +
                                  " requested");
    }
    out.insert(out.end(), reservoirs[c].begin(), reservoirs[c].end());
  }
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace rotssl
