#pragma once

// Minimal protobuf wire-format primitives: varints, tags, length-delimited
// fields, fixed32 floats, and a field-by-field reader that reports the
// absolute byte offset of any malformed input.

#include <bit>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "signdet/error.hpp"

namespace signdet::wire {

enum class WireType : std::uint8_t { Varint = 0, Fixed64 = 1, LengthDelimited = 2, Fixed32 = 5 };

inline void put_varint(std::vector<std::uint8_t>& out, std::uint64_t v) {
  while (v >= 0x80) {
    out.push_back(static_cast<std::uint8_t>(v | 0x80));
    v >>= 7;
  }
  out.push_back(static_cast<std::uint8_t>(v));
}

inline void put_tag(std::vector<std::uint8_t>& out, std::uint32_t field, WireType type) {
  put_varint(out, (std::uint64_t{field} << 3) | static_cast<std::uint8_t>(type));
}

inline void put_bytes(std::vector<std::uint8_t>& out, std::uint32_t field, std::span<const std::uint8_t> bytes) {
  put_tag(out, field, WireType::LengthDelimited);
  put_varint(out, bytes.size());
  out.insert(out.end(), bytes.begin(), bytes.end());
}

inline void put_bytes(std::vector<std::uint8_t>& out, std::uint32_t field, std::string_view s) {
  put_bytes(out, field, std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

inline void put_fixed32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

struct Field {
  std::uint32_t number = 0;
  WireType type = WireType::Varint;
  std::uint64_t varint = 0;               // Varint / Fixed32 / Fixed64 value
  std::span<const std::uint8_t> payload;  // LengthDelimited contents
  std::size_t offset = 0;                 // absolute offset of the payload
};

/// Iterates the fields of one message. `base` is the absolute offset of
/// `bytes` within the outermost buffer, used in error messages.
class Reader {
 public:
  explicit Reader(std::span<const std::uint8_t> bytes, std::size_t base = 0) : bytes_(bytes), base_(base) {}

  bool done() const noexcept { return pos_ >= bytes_.size(); }
  std::size_t offset() const noexcept { return base_ + pos_; }

  std::uint64_t varint() {
    std::uint64_t v = 0;
    for (int shift = 0; shift < 64; shift += 7) {
      if (pos_ >= bytes_.size()) fail(ErrorKind::DecodeError, "truncated varint at byte " + std::to_string(offset()));
      const std::uint8_t b = bytes_[pos_++];
      v |= std::uint64_t{b & 0x7Fu} << shift;
      if (!(b & 0x80)) return v;
    }
    fail(ErrorKind::DecodeError, "varint longer than 10 bytes at byte " + std::to_string(offset()));
  }

  Field next() {
    Field f;
    const std::size_t at = offset();
    const std::uint64_t key = varint();
    f.number = static_cast<std::uint32_t>(key >> 3);
    f.offset = at;
    const auto type = static_cast<std::uint8_t>(key & 7);
    if (f.number == 0) fail(ErrorKind::DecodeError, "field number 0 at byte " + std::to_string(at));
    switch (type) {
      case 0:
        f.type = WireType::Varint;
        f.varint = varint();
        break;
      case 1:
        f.type = WireType::Fixed64;
        f.varint = fixed(8);
        break;
      case 5:
        f.type = WireType::Fixed32;
        f.varint = fixed(4);
        break;
      case 2: {
        f.type = WireType::LengthDelimited;
        const std::uint64_t len = varint();
        if (len > bytes_.size() - pos_) {
          fail(ErrorKind::DecodeError, "length " + std::to_string(len) + " overruns message at byte " +
                                           std::to_string(offset()));
        }
        f.offset = offset();
        f.payload = bytes_.subspan(pos_, static_cast<std::size_t>(len));
        pos_ += static_cast<std::size_t>(len);
        break;
      }
      default:
        fail(ErrorKind::DecodeError, "unsupported wire type " + std::to_string(type) + " at byte " + std::to_string(at));
    }
    return f;
  }

 private:
  std::uint64_t fixed(int n) {
    if (bytes_.size() - pos_ < static_cast<std::size_t>(n)) {
      fail(ErrorKind::DecodeError, "truncated fixed-width value at byte " + std::to_string(offset()));
    }
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= std::uint64_t{bytes_[pos_ + i]} << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }

  std::span<const std::uint8_t> bytes_;
  std::size_t base_ = 0;
  std::size_t pos_ = 0;
};

inline void expect_type(const Field& f, WireType type, std::string_view what) {
  if (f.type != type) {
    fail(ErrorKind::DecodeError, std::string(what) + ": unexpected wire type near byte " + std::to_string(f.offset));
  }
}

}  // namespace signdet::wire
