// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/metrics.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace rotssl {

namespace {

std::int64_t now_ns() {
  return std::chrono::duration_cast<std::chrono::nanoseconds>(std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

void check_token(const std::string& token, const char* what) {
  if (token.empty() || token.find_first_of(" =\n\r\t") != std::string::npos) {
    throw std::invalid_argument(std::string("metrics: invalid ") + what + " '" + token + "'");
  }
}

double parse_double(const std::string& text) {
  if (text == "nan") return std::nan("");
  if (text == "inf") return INFINITY;
  if (text == "-inf") return -INFINITY;
  double value = 0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) {
    throw std::invalid_argument("metrics: not a number '" + text + "'");
  }
  return value;
}

}  // namespace

void MetricsRecord::set(const std::string& key, double value) {
  for (auto& [k, v] : scalars) {
    if (k == key) {
      v = value;
      return;
    }
  }
  scalars.emplace_back(key, value);
}

std::optional<double> MetricsRecord::get(const std::string& key) const {
  for (const auto& [k, v] : scalars) {
    if (k == key) return v;
  }
  return std::nullopt;
}

std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

std::string format_record(const MetricsRecord& record) {
  check_token(record.experiment, "experiment id");
  std::string line = "experiment=" + record.experiment + " epoch=" + std::to_string(record.epoch) +
                     " step=" + std::to_string(record.step);
  for (const auto& [k, v] : record.tags) {
    check_token(k, "tag key");
    check_token(v, "tag value");
    line += ' ' + k + '=' + v;
  }
  for (const auto& [k, v] : record.scalars) {
    check_token(k, "metric key");
    line += ' ' + k + '=' + format_number(v);
  }
  if (record.wall_time) line += " time=" + format_number(*record.wall_time);
  return line;
}

MetricsRecord parse_record(const std::string& line) {
  MetricsRecord record;
  std::istringstream in(line);
  std::string field;
  bool seen_experiment = false, seen_epoch = false, seen_step = false;
  while (in >> field) {
    const auto eq = field.find('=');
    if (eq == std::string::npos || eq == 0) throw std::invalid_argument("metrics: malformed field '" + field + "'");
    const auto key = field.substr(0, eq);
    const auto value = field.substr(eq + 1);
    if (key == "experiment") {
      record.experiment = value;
      seen_experiment = true;
    } else if (key == "epoch") {
      record.epoch = static_cast<int>(parse_double(value));
      seen_epoch = true;
    } else if (key == "step") {
      record.step = static_cast<std::int64_t>(parse_double(value));
      seen_step = true;
    } else if (key == "time") {
      record.wall_time = parse_double(value);
    } else {
      double number = 0;
      const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), number);
      if (value == "nan" || value == "inf" || value == "-inf" ||
          (ec == std::errc() && ptr == value.data() + value.size())) {
        record.scalars.emplace_back(key, parse_double(value));
      } else {
        record.tags.emplace_back(key, value);
      }
    }
  }
  if (!seen_experiment || !seen_epoch || !seen_step) {
    throw std::invalid_argument("metrics: record lacks experiment/epoch/step: '" + line + "'");
  }
  return record;
}

MetricsWriter::MetricsWriter(const std::filesystem::path& path, bool deterministic)
    : out_(path, std::ios::binary | std::ios::app), deterministic_(deterministic), start_ns_(now_ns()) {
  if (!out_) throw std::runtime_error("cannot open metrics file " + path.string());
}

void MetricsWriter::write(MetricsRecord record) {
  if (deterministic_) {
    record.wall_time.reset();
  } else {
    record.wall_time = static_cast<double>(now_ns() - start_ns_) * 1e-9;
  }
  const auto line = format_record(record) + '\n';
  out_.write(line.data(), static_cast<std::streamsize>(line.size()));
  out_.flush();
  if (!out_) throw std::runtime_error("metrics: write failed");
}

MetricsSink MetricsWriter::sink() {
  return [this](const MetricsRecord& r) { write(r); };
}

}  // namespace rotssl
