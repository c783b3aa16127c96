// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-based key=value files: '#' starts a comment, blank lines are skipped,
// whitespace around keys and values is trimmed. Later keys override earlier
// ones.

#pragma once

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace rotssl {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct KeyValueFile {
  std::vector<std::pair<std::string, std::string>> entries;

  std::optional<std::string> get(const std::string& key) const;
  void set(const std::string& key, const std::string& value);
};

KeyValueFile parse_key_values(const std::string& text, const std::string& source = "config");
KeyValueFile load_key_values(const std::filesystem::path& path);
std::string format_key_values(const KeyValueFile& file);

}  // namespace rotssl
