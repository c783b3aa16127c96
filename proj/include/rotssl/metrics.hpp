// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0
//
// Line-structured metrics: one self-describing key=value record per line.

#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace rotssl {

struct MetricsRecord {
  std::string experiment;
  int epoch = 0;
  std::int64_t step = 0;
  std::vector<std::pair<std::string, double>> scalars;
  std::vector<std::pair<std::string, std::string>> tags;
  // Seconds since the writer started; absent in deterministic runs.
  std::optional<double> wall_time;

  void set(const std::string& key, double value);
  std::optional<double> get(const std::string& key) const;
};

/// Shortest round-trip decimal form.
std::string format_number(double value);

/// "experiment=<id> epoch=<e> step=<s> <key>=<value>... [time=<t>]". Keys and
/// tag values must not contain spaces, '=' or newlines.
std::string format_record(const MetricsRecord& record);
MetricsRecord parse_record(const std::string& line);

using MetricsSink = std::function<void(const MetricsRecord&)>;

/// Appends records to a file, one write and flush per record so that a crash
/// never leaves a partial line behind.
class MetricsWriter {
 public:
  MetricsWriter(const std::filesystem::path& path, bool deterministic);
  void write(MetricsRecord record);
  MetricsSink sink();

 private:
  std::ofstream out_;
  bool deterministic_;
  std::int64_t start_ns_;
};

}  // namespace rotssl
