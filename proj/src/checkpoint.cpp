// Copyright (c) 2026, rotssl authors
// SPDX-License-Identifier: Apache-2.0

#include "rotssl/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

namespace rotssl {

namespace {

constexpr char kMagic[8] = {'R', 'S', 'S', 'L', 'C', 'K', 'P', 'T'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }
  void str(const std::string& s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes_.insert(bytes_.end(), s.begin(), s.end());
  }
  void raw(const void* data, std::size_t n) {
    const auto* p = static_cast<const std::uint8_t*>(data);
    bytes_.insert(bytes_.end(), p, p + n);
  }
  std::vector<std::uint8_t>& bytes() { return bytes_; }

 private:
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& bytes, std::string source) : bytes_(bytes), source_(std::move(source)) {}

  void need(std::size_t n, const char* what) {
    if (pos_ + n > bytes_.size()) {
      throw CheckpointError(source_ + ": truncated while reading " + what + " at byte " + std::to_string(pos_));
    }
  }
  std::uint8_t u8(const char* what) {
    need(1, what);
    return bytes_[pos_++];
  }
  std::uint32_t u32(const char* what) {
    need(4, what);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  std::uint64_t u64(const char* what) {
    need(8, what);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_++]) << (8 * i);
    return v;
  }
  float f32(const char* what) { return std::bit_cast<float>(u32(what)); }
  std::string str(const char* what) {
    const auto n = u32(what);
    need(n, what);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool at_end() const { return pos_ == bytes_.size(); }
  std::size_t pos() const { return pos_; }

 private:
  const std::vector<std::uint8_t>& bytes_;
  std::string source_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const std::string& name, const Shape& shape, std::span<const float> values) {
  w.str(name);
  w.u32(static_cast<std::uint32_t>(shape.size()));
  for (auto d : shape) w.u64(static_cast<std::uint64_t>(d));
  for (float v : values) w.f32(v);
}

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.raw(kMagic, sizeof kMagic);
  w.u32(kCheckpointVersion);
  w.u64(spec_fingerprint(ckpt.spec));
  w.u32(static_cast<std::uint32_t>(ckpt.epoch));
  w.str(spec_to_text(ckpt.spec));
  w.str(ckpt.config_echo);
  w.str(ckpt.rng_state);
  w.u8(ckpt.normalization ? 1 : 0);
  if (ckpt.normalization) {
    const auto& n = *ckpt.normalization;
    if (n.mean.size() != n.stddev.size()) throw CheckpointError("normalization mean/stddev length mismatch");
    w.u32(static_cast<std::uint32_t>(n.mean.size()));
    for (float v : n.mean) w.f32(v);
    for (float v : n.stddev) w.f32(v);
  }
  // std::map iteration gives a canonical record order.
  w.u32(static_cast<std::uint32_t>(ckpt.state.parameters.size() + 2 * ckpt.state.norm_states.size()));
  for (const auto& [name, t] : ckpt.state.parameters) write_tensor(w, name, t.shape(), t.data());
  for (const auto& [layer, ns] : ckpt.state.norm_states) {
    const Shape shape{static_cast<std::int64_t>(ns.running_mean.size())};
    write_tensor(w, layer + ".running_mean", shape, ns.running_mean);
    write_tensor(w, layer + ".running_var", shape, ns.running_var);
  }
  return std::move(w.bytes());
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes, const std::string& source) {
  Reader r(bytes, source);
  r.need(sizeof kMagic, "magic");
  if (std::memcmp(bytes.data(), kMagic, sizeof kMagic) != 0) {
    throw CheckpointError(source + ": bad magic bytes, not a rotssl checkpoint");
  }
  for (std::size_t i = 0; i < sizeof kMagic; ++i) r.u8("magic");
  const auto version = r.u32("version");
  if (version != kCheckpointVersion) {
    throw CheckpointError(source + ": unsupported format version " + std::to_string(version) + " (expected " +
                          std::to_string(kCheckpointVersion) + ")");
  }
  const auto fingerprint = r.u64("fingerprint");
  Checkpoint ckpt;
  ckpt.epoch = static_cast<int>(r.u32("epoch"));
  const auto spec_text = r.str("spec text");
  try {
    ckpt.spec = spec_from_text(spec_text);
  } catch (const std::exception& e) {
    throw CheckpointError(source + ": unreadable spec: " + e.what());
  }
  if (spec_fingerprint(ckpt.spec) != fingerprint) {
    throw CheckpointError(source + ": spec fingerprint does not match the stored spec text");
  }
  ckpt.config_echo = r.str("config echo");
  ckpt.rng_state = r.str("rng state");
  if (r.u8("normalization flag")) {
    const auto c = r.u32("normalization channels");
    Normalization n;
    for (std::uint32_t i = 0; i < c; ++i) n.mean.push_back(r.f32("normalization mean"));
    for (std::uint32_t i = 0; i < c; ++i) n.stddev.push_back(r.f32("normalization stddev"));
    ckpt.normalization = std::move(n);
  }

  // Start from a structurally complete state, then overwrite every value.
  ckpt.state = init_state(ckpt.spec, 0);
  std::map<std::string, bool> seen;
  const auto count = r.u32("record count");
  for (std::uint32_t k = 0; k < count; ++k) {
    const auto name = r.str("record name");
    const auto rank = r.u32("record rank");
    Shape shape;
    for (std::uint32_t i = 0; i < rank; ++i) shape.push_back(static_cast<std::int64_t>(r.u64("record dims")));
    const auto numel = shape_numel(shape);
    r.need(numel * 4, "record values");
    std::vector<float> values(numel);
    for (auto& v : values) v = r.f32("record values");
    if (!seen.emplace(name, true).second) throw CheckpointError(source + ": duplicate record '" + name + "'");

    auto assign = [&](std::vector<float>& dst) {
      if (dst.size() != values.size()) {
        throw CheckpointError(source + ": record '" + name + "' has " + std::to_string(values.size()) +
                              " values, spec expects " + std::to_string(dst.size()));
      }
      dst = values;
    };
    if (auto it = ckpt.state.parameters.find(name); it != ckpt.state.parameters.end()) {
      if (it->second.shape() != shape) {
        throw CheckpointError(source + ": record '" + name + "' has shape " + shape_str(shape) + ", spec expects " +
                              shape_str(it->second.shape()));
      }
      std::copy(values.begin(), values.end(), it->second.data().begin());
      continue;
    }
    const auto dot = name.rfind('.');
    const auto layer = dot == std::string::npos ? name : name.substr(0, dot);
    const auto field = dot == std::string::npos ? std::string() : name.substr(dot + 1);
    auto ns = ckpt.state.norm_states.find(layer);
    if (ns != ckpt.state.norm_states.end() && field == "running_mean") {
      assign(ns->second.running_mean);
    } else if (ns != ckpt.state.norm_states.end() && field == "running_var") {
      assign(ns->second.running_var);
    } else {
      throw CheckpointError(source + ": record '" + name + "' does not belong to the stored spec");
    }
  }
  const auto expected = ckpt.state.parameters.size() + 2 * ckpt.state.norm_states.size();
  if (seen.size() != expected) {
    throw CheckpointError(source + ": " + std::to_string(seen.size()) + " tensor records, spec needs " +
                          std::to_string(expected));
  }
  if (!r.at_end()) throw CheckpointError(source + ": trailing bytes after byte " + std::to_string(r.pos()));
  return ckpt;
}

void save_checkpoint(const std::filesystem::path& path, const Checkpoint& ckpt) {
  write_file_atomic(path, serialize_checkpoint(ckpt));
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) throw CheckpointError("checkpoint not found: " + path.string());
  return deserialize_checkpoint(read_file(path), path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path, const ModelSpec& expected) {
  auto ckpt = load_checkpoint(path);
  if (spec_fingerprint(ckpt.spec) != spec_fingerprint(expected)) {
    std::ostringstream msg;
    msg << path.string() << ": spec fingerprint " << std::hex << spec_fingerprint(ckpt.spec)
        << " does not match the expected model " << spec_fingerprint(expected);
    throw CheckpointError(msg.str());
  }
  return ckpt;
}

}  // namespace rotssl
