#pragma once

// Checkpoint files: "SLTC" magic, u32 version, u64 step, u32 tensor count,
// then per tensor: u32 name length, name bytes, u32 rank, u32 dims, and the
// float32 payload. Every integer and float is little-endian.

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "signdet/error.hpp"
#include "signdet/fs_util.hpp"
#include "signdet/tinynet.hpp"

namespace signdet {

struct NamedTensor {
  std::string name;
  std::vector<std::uint32_t> dims;
  std::vector<float> values;

  friend bool operator==(const NamedTensor&, const NamedTensor&) = default;
};

struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::uint32_t version = kVersion;
  std::uint64_t step = 0;
  std::vector<NamedTensor> tensors;

  const NamedTensor* find(const std::string& name) const {
    for (const auto& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }

  friend bool operator==(const Checkpoint&, const Checkpoint&) = default;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}
inline void put_u64(std::vector<std::uint8_t>& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

class CheckpointReader {
 public:
  explicit CheckpointReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}

  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) {
      fail(ErrorKind::CorruptCheckpoint, "unexpected end of checkpoint at byte " + std::to_string(pos_));
    }
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= std::uint32_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 4;
    return v;
  }
  std::uint64_t u64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += 8;
    return v;
  }
  std::string str(std::size_t n) {
    need(n);
    std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  bool done() const { return pos_ == bytes_.size(); }
  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> serialize_checkpoint(const Checkpoint& ckpt) {
  std::vector<std::uint8_t> out{'S', 'L', 'T', 'C'};
  detail::put_u32(out, ckpt.version);
  detail::put_u64(out, ckpt.step);
  detail::put_u32(out, static_cast<std::uint32_t>(ckpt.tensors.size()));
  for (const auto& t : ckpt.tensors) {
    detail::put_u32(out, static_cast<std::uint32_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    detail::put_u32(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) detail::put_u32(out, d);
    for (float v : t.values) detail::put_u32(out, std::bit_cast<std::uint32_t>(v));
  }
  return out;
}

inline Checkpoint deserialize_checkpoint(std::span<const std::uint8_t> bytes) {
  detail::CheckpointReader r(bytes);
  if (r.str(4) != "SLTC") fail(ErrorKind::CorruptCheckpoint, "bad magic");
  Checkpoint ckpt;
  ckpt.version = r.u32();
  if (ckpt.version != Checkpoint::kVersion) {
    fail(ErrorKind::CorruptCheckpoint, "unsupported checkpoint version " + std::to_string(ckpt.version));
  }
  ckpt.step = r.u64();
  const std::uint32_t count = r.u32();
  for (std::uint32_t k = 0; k < count; ++k) {
    NamedTensor t;
    t.name = r.str(r.u32());
    const std::uint32_t rank = r.u32();
    if (rank > 8) fail(ErrorKind::CorruptCheckpoint, "implausible tensor rank in " + t.name);
    std::uint64_t n = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      t.dims.push_back(r.u32());
      n *= t.dims.back();
    }
    if (n * 4 > r.remaining()) fail(ErrorKind::CorruptCheckpoint, "tensor " + t.name + " is truncated");
    t.values.resize(n);
    for (auto& v : t.values) v = std::bit_cast<float>(r.u32());
    ckpt.tensors.push_back(std::move(t));
  }
  if (!r.done()) fail(ErrorKind::CorruptCheckpoint, "trailing bytes after last tensor");
  return ckpt;
}

inline fs::path checkpoint_path(const fs::path& dir, std::uint64_t step) {
  return dir / ("ckpt-" + std::to_string(step) + ".sltc");
}

inline fs::path save_checkpoint(const Checkpoint& ckpt, const fs::path& dir) {
  const auto path = checkpoint_path(dir, ckpt.step);
  write_file_atomic(path, serialize_checkpoint(ckpt));
  return path;
}

inline Checkpoint load_checkpoint(const fs::path& path) { return deserialize_checkpoint(read_file_bytes(path)); }

/// The highest-step checkpoint in `dir`.
inline std::optional<fs::path> latest_checkpoint_path(const fs::path& dir) {
  std::error_code ec;
  if (!fs::is_directory(dir, ec)) return std::nullopt;
  static const std::regex pattern(R"(ckpt-(\d+)\.sltc)");
  std::optional<fs::path> best;
  std::uint64_t best_step = 0;
  for (const auto& entry : fs::directory_iterator(dir)) {
    std::smatch m;
    const std::string name = entry.path().filename().string();
    if (!entry.is_regular_file() || !std::regex_match(name, m, pattern)) continue;
    const std::uint64_t step = std::stoull(m[1].str());
    if (!best || step > best_step) {
      best = entry.path();
      best_step = step;
    }
  }
  return best;
}

inline Checkpoint restore_latest(const fs::path& dir) {
  const auto path = latest_checkpoint_path(dir);
  if (!path) fail(ErrorKind::NotFound, "no checkpoint in " + dir.string());
  return load_checkpoint(*path);
}

template <typename T>
void append_tensors(Checkpoint& ckpt, const std::vector<const Tensor<T>*>& tensors, const std::string& prefix = "") {
  for (const auto* p : tensors) {
    NamedTensor t;
    t.name = prefix + p->name;
    for (int d : p->shape) t.dims.push_back(static_cast<std::uint32_t>(d));
    t.values.reserve(p->size());
    for (T v : p->values) t.values.push_back(static_cast<float>(v));
    ckpt.tensors.push_back(std::move(t));
  }
}

template <typename T>
Checkpoint capture_model(const TinyNet<T>& model, std::uint64_t step) {
  Checkpoint ckpt;
  ckpt.step = step;
  append_tensors(ckpt, model.parameters());
  return ckpt;
}

/// Copies every model parameter out of the checkpoint; shapes must match.
template <typename T>
void load_model(TinyNet<T>& model, const Checkpoint& ckpt) {
  for (auto* p : model.parameters()) {
    const NamedTensor* t = ckpt.find(p->name);
    if (!t) fail(ErrorKind::CorruptCheckpoint, "checkpoint lacks tensor " + p->name);
    std::vector<std::uint32_t> dims(p->shape.begin(), p->shape.end());
    if (t->dims != dims) fail(ErrorKind::ShapeError, "checkpoint tensor " + p->name + " has a different shape");
    for (std::size_t i = 0; i < p->size(); ++i) p->values[i] = static_cast<T>(t->values[i]);
  }
}

}  // namespace signdet
