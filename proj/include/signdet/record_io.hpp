#pragma once

// Record files: a plain sequence of
//   u64 length | u32 masked_crc(length bytes) | payload | u32 masked_crc(payload)
// with all integers little-endian.

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "signdet/crc32c.hpp"
#include "signdet/error.hpp"
#include "signdet/fs_util.hpp"

namespace signdet {

namespace detail {

inline void put_le(std::vector<std::uint8_t>& out, std::uint64_t v, int n) {
  for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint64_t get_le(std::span<const std::uint8_t> b, std::size_t at, int n) {
  std::uint64_t v = 0;
  for (int i = 0; i < n; ++i) v |= std::uint64_t{b[at + static_cast<std::size_t>(i)]} << (8 * i);
  return v;
}

}  // namespace detail

inline void append_record(std::vector<std::uint8_t>& out, std::span<const std::uint8_t> payload) {
  const std::size_t at = out.size();
  detail::put_le(out, payload.size(), 8);
  const std::uint32_t len_crc = masked_crc32c(std::span<const std::uint8_t>(out).subspan(at, 8));
  detail::put_le(out, len_crc, 4);
  out.insert(out.end(), payload.begin(), payload.end());
  detail::put_le(out, masked_crc32c(payload), 4);
}

inline std::vector<std::uint8_t> frame_records(std::span<const std::vector<std::uint8_t>> payloads) {
  std::vector<std::uint8_t> out;
  for (const auto& p : payloads) append_record(out, p);
  return out;
}

inline std::vector<std::vector<std::uint8_t>> unframe_records(std::span<const std::uint8_t> bytes) {
  std::vector<std::vector<std::uint8_t>> records;
  std::size_t pos = 0;
  while (pos < bytes.size()) {
    const std::size_t index = records.size();
    const std::string where = "record " + std::to_string(index) + " at byte " + std::to_string(pos);
    if (bytes.size() - pos < 12) fail(ErrorKind::TruncatedFile, where + ": incomplete header");
    const std::uint64_t len = detail::get_le(bytes, pos, 8);
    const auto len_crc = static_cast<std::uint32_t>(detail::get_le(bytes, pos + 8, 4));
    if (masked_crc32c(bytes.subspan(pos, 8)) != len_crc) fail(ErrorKind::CorruptRecord, where + ": length crc mismatch");
    pos += 12;
    if (len > bytes.size() - pos || bytes.size() - pos - len < 4) {
      fail(ErrorKind::TruncatedFile, where + ": payload of " + std::to_string(len) + " bytes runs past end of file");
    }
    const auto payload = bytes.subspan(pos, static_cast<std::size_t>(len));
    pos += static_cast<std::size_t>(len);
    const auto data_crc = static_cast<std::uint32_t>(detail::get_le(bytes, pos, 4));
    pos += 4;
    if (masked_crc32c(payload) != data_crc) fail(ErrorKind::CorruptRecord, where + ": payload crc mismatch");
    records.emplace_back(payload.begin(), payload.end());
  }
  return records;
}

/// Writes atomically (temp file, then rename).
inline void write_records(std::span<const std::vector<std::uint8_t>> payloads, const fs::path& path) {
  write_file_atomic(path, frame_records(payloads));
}

inline std::vector<std::vector<std::uint8_t>> read_records(const fs::path& path) {
  return unframe_records(read_file_bytes(path));
}

}  // namespace signdet
