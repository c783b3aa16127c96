// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Labeled image splits: CIFAR-10 binary batches, the procedural toy set,
// and per-channel normalization.

#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "rotssl/rotations.hpp"
#include "rotssl/tensor.hpp"

namespace rotssl {

struct Normalization {
  std::vector<float> mean;
  std::vector<float> stddev;
};

enum class Split { train, test };

struct DatasetSplit {
  int channels = 3;
  int size = 32;
  std::vector<std::uint8_t> pixels;  // N records of C,H,W bytes
  std::vector<int> labels;
  std::vector<std::string> class_names;
  Split split = Split::train;
  std::optional<Normalization> normalization;

  std::size_t count() const { return labels.size(); }
  std::size_t image_bytes() const { return static_cast<std::size_t>(channels) * size * size; }
  int num_classes() const { return static_cast<int>(class_names.size()); }

  Image image(std::size_t index) const;
  /// Raw-range float batch of the given records.
  ImageBatch gather(std::span<const std::size_t> indices) const;
  DatasetSplit subset(std::span<const std::size_t> indices) const;
  /// Throws std::invalid_argument if labels/pixels disagree.
  void validate() const;
};

struct DatasetPair {
  DatasetSplit train;
  DatasetSplit test;
};

/// Error while decoding a record file; carries the failing byte offset.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

std::vector<std::string> cifar10_class_names();

/// Decodes label-prefixed records (1 label byte + C*S*S channel-planar
/// bytes). `expected_records` = 0 accepts any whole number of records.
DatasetSplit parse_label_records(std::span<const std::uint8_t> bytes, int channels, int size, int num_classes,
                                 std::size_t expected_records, const std::string& source);
std::vector<std::uint8_t> serialize_label_records(const DatasetSplit& split);

struct CifarLoadOptions {
  std::size_t records_per_file = 10000;
};

/// data_batch_1..5.bin and test_batch.bin from `dir`.
DatasetPair load_cifar10(const std::filesystem::path& dir, const CifarLoadOptions& options = {});

/// Procedural oriented-shape images. Each class is a glyph with a canonical
/// upright pose drawn with jittered position, scale, tilt and colours, so
/// both the applied rotation and the class are recoverable. At most 8
/// classes; size >= 8.
DatasetPair make_toy_dataset(std::uint64_t seed, int n_per_class, int size, int num_classes,
                             int test_per_class = -1);

/// Writes meta.txt + train.bin + test.bin (record layout as above).
void save_dataset(const std::filesystem::path& dir, const DatasetPair& data);
/// Loads a directory written by save_dataset, or a CIFAR-10 binary directory.
DatasetPair load_dataset(const std::filesystem::path& dir);

/// Per-channel mean and standard deviation of the raw bytes.
Normalization compute_normalization(const DatasetSplit& split);
void normalize_in_place(ImageBatch& batch, const Normalization& norm);
Tensor<float> to_tensor(const ImageBatch& batch);

/// Seeded stratified selection of `per_class` records per class using
/// per-class reservoir sampling; indices returned in ascending order.
std::vector<std::size_t> stratified_subset(const DatasetSplit& split, int per_class, std::uint64_t seed);

void write_file_atomic(const std::filesystem::path& path, std::span<const std::uint8_t> bytes);
void write_text_atomic(const std::filesystem::path& path, const std::string& text);
std::vector<std::uint8_t> read_file(const std::filesystem::path& path);

}  // namespace rotssl
