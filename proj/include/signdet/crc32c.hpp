#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>

namespace signdet {

namespace detail {

inline constexpr std::array<std::uint32_t, 256> kCrc32cTable = [] {
  std::array<std::uint32_t, 256> t{};
  for (std::uint32_t i = 0; i < 256; ++i) {
    std::uint32_t c = i;
    for (int k = 0; k < 8; ++k) c = (c & 1u) ? (c >> 1) ^ 0x82F63B78u : c >> 1;
    t[i] = c;
  }
  return t;
}();

}  // namespace detail

/// Castagnoli CRC (reflected, poly 0x1EDC6F41).
inline std::uint32_t crc32c(std::span<const std::uint8_t> bytes) noexcept {
  std::uint32_t c = 0xFFFFFFFFu;
  for (std::uint8_t b : bytes) c = detail::kCrc32cTable[(c ^ b) & 0xFFu] ^ (c >> 8);
  return c ^ 0xFFFFFFFFu;
}

inline std::uint32_t crc32c(std::string_view s) noexcept {
  return crc32c(std::span<const std::uint8_t>(reinterpret_cast<const std::uint8_t*>(s.data()), s.size()));
}

inline constexpr std::uint32_t mask_crc(std::uint32_t c) noexcept {
  return ((c >> 15) | (c << 17)) + 0xa282ead8u;
}

inline std::uint32_t masked_crc32c(std::span<const std::uint8_t> bytes) noexcept { return mask_crc(crc32c(bytes)); }

}  // namespace signdet
