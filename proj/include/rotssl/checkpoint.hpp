// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Binary checkpoint container.
//
//   "RSSLCKPT" | u32 version | u64 spec fingerprint | u32 epoch
//   str spec text | str config echo | str rng state
//   u8 has_norm [u32 C | C x f32 mean | C x f32 stddev]
//   u32 record count | records: str name | u32 rank | rank x u64 dims | f32...
//
// All integers and floats little-endian; str = u32 length + bytes. Batch-norm
// running statistics are stored as "<layer>.running_mean" / ".running_var".

#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rotssl/dataset.hpp"
#include "rotssl/model.hpp"

namespace rotssl {

inline constexpr std::uint32_t kCheckpointVersion = 1;

struct Checkpoint {
  ModelSpec spec;
  ModelState<float> state;
  int epoch = 0;
  std::string config_echo;
  std::string rng_state;
  std::optional<Normalization> normalization;

  Model<float> model() const { return {spec, state.clone()}; }
};

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source = "checkpoint");

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt);
Checkpoint load_checkpoint(const std::filesystem::path& path);
/// Also refuses a checkpoint whose spec differs from `expected`.
Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected);

}  // namespace rotssl
