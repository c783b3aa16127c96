// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

namespace rotssl {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

std::optional<std::string> KeyValueFile::get(const std::string& key) const {
  for (auto it = entries.rbegin(); it != entries.rend(); ++it) {
    if (it->first == key) return it->second;
  }
  return std::nullopt;
}

void KeyValueFile::set(const std::string& key, const std::string& value) {
  for (auto& [k, v] : entries) {
    if (k == key) {
      v = value;
      return;
    }
  }
  entries.emplace_back(key, value);
}

KeyValueFile parse_key_values(const std::string& text, const std::string& source) {
  KeyValueFile out;
  std::istringstream in(text);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(number) + ": expected key=value, got '" + line + "'");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty() || std::any_of(key.begin(), key.end(), [](char c) { return c == ' ' || c == '\t'; })) {
      throw ConfigError(source + ":" + std::to_string(number) + ": bad key '" + key + "'");
    }
    out.set(key, trim(line.substr(eq + 1)));
  }
  return out;
}

KeyValueFile load_key_values(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open config file " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_key_values(ss.str(), path.string());
}

std::string format_key_values(const KeyValueFile& file) {
  std::string out;
  for (const auto& [k, v] : file.entries) out += k + "=" + v + "\n";
  return out;
}

}  // namespace rotssl
