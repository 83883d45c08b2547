#pragma once

// RGB images and the built-in binary PPM (P6) codec. Other formats travel
// as opaque bytes; probe_image_size reads just enough of a PNG or JPEG
// header to report dimensions.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "signdet/error.hpp"

namespace signdet {

struct Image {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;  // row-major, 3 bytes per pixel

  Image() = default;
  Image(int w, int h, std::uint8_t fill = 0)
      : width(w), height(h), rgb(static_cast<std::size_t>(w) * h * 3, fill) {}

  std::uint8_t* pixel(int x, int y) { return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3; }
  const std::uint8_t* pixel(int x, int y) const {
    return rgb.data() + (static_cast<std::size_t>(y) * width + x) * 3;
  }

  friend bool operator==(const Image&, const Image&) = default;
};

inline std::vector<std::uint8_t> encode_ppm(const Image& img) {
  const std::string header = "P6\n" + std::to_string(img.width) + " " + std::to_string(img.height) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  out.insert(out.end(), img.rgb.begin(), img.rgb.end());
  return out;
}

inline Image decode_ppm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 0;
  auto skip_ws = [&] {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
  };
  auto number = [&]() -> int {
    skip_ws();
    long v = 0;
    std::size_t digits = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos]) && digits < 9) {
      v = v * 10 + (bytes[pos++] - '0');
      ++digits;
    }
    if (digits == 0) fail(ErrorKind::DecodeError, "PPM header: expected a number at byte " + std::to_string(pos));
    return static_cast<int>(v);
  };
  if (bytes.size() < 2 || bytes[0] != 'P' || bytes[1] != '6') fail(ErrorKind::DecodeError, "not a binary PPM (P6)");
  pos = 2;
  const int w = number();
  const int h = number();
  const int maxval = number();
  if (w <= 0 || h <= 0 || maxval != 255) fail(ErrorKind::DecodeError, "unsupported PPM dimensions or maxval");
  ++pos;  // single whitespace before raster
  const std::size_t need = static_cast<std::size_t>(w) * h * 3;
  if (bytes.size() < pos + need) fail(ErrorKind::DecodeError, "PPM raster truncated");
  Image img(w, h);
  std::copy(bytes.begin() + static_cast<std::ptrdiff_t>(pos), bytes.begin() + static_cast<std::ptrdiff_t>(pos + need),
            img.rgb.begin());
  return img;
}

/// Format tag from a file name extension ("ppm", "jpeg", "png").
inline std::string image_format_of(std::string_view filename) {
  const auto dot = filename.rfind('.');
  if (dot == std::string_view::npos) return "";
  std::string ext(filename.substr(dot + 1));
  for (auto& c : ext) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (ext == "jpg") ext = "jpeg";
  return ext;
}

inline std::string image_content_type(std::string_view format) {
  if (format == "ppm") return "image/x-portable-pixmap";
  if (format == "jpeg") return "image/jpeg";
  if (format == "png") return "image/png";
  return "application/octet-stream";
}

inline bool is_image_format(std::string_view format) {
  return format == "ppm" || format == "jpeg" || format == "png";
}

/// Width and height from the file header, without decoding pixels.
inline std::optional<std::pair<int, int>> probe_image_size(std::span<const std::uint8_t> b) {
  if (b.size() >= 2 && b[0] == 'P' && b[1] == '6') {
    try {
      const Image img = decode_ppm(b);
      return std::make_pair(img.width, img.height);
    } catch (const Error&) {
      return std::nullopt;
    }
  }
  if (b.size() >= 24 && b[0] == 0x89 && b[1] == 'P' && b[2] == 'N' && b[3] == 'G') {
    auto be32 = [&](std::size_t o) {
      return static_cast<int>((std::uint32_t{b[o]} << 24) | (std::uint32_t{b[o + 1]} << 16) |
                              (std::uint32_t{b[o + 2]} << 8) | b[o + 3]);
    };
    return std::make_pair(be32(16), be32(20));
  }
  if (b.size() >= 4 && b[0] == 0xFF && b[1] == 0xD8) {
    std::size_t pos = 2;
    while (pos + 9 < b.size()) {
      if (b[pos] != 0xFF) return std::nullopt;
      const std::uint8_t marker = b[pos + 1];
      const std::size_t len = (std::size_t{b[pos + 2]} << 8) | b[pos + 3];
      const bool sof = marker >= 0xC0 && marker <= 0xCF && marker != 0xC4 && marker != 0xC8 && marker != 0xCC;
      if (sof) {
        const int h = (b[pos + 5] << 8) | b[pos + 6];
        const int w = (b[pos + 7] << 8) | b[pos + 8];
        return std::make_pair(w, h);
      }
      pos += 2 + len;
    }
  }
  return std::nullopt;
}

/// Bilinear resize (pixel centers aligned).
inline Image resize_bilinear(const Image& src, int width, int height) {
  if (src.width == width && src.height == height) return src;
  Image dst(width, height);
  const double sx = static_cast<double>(src.width) / width;
  const double sy = static_cast<double>(src.height) / height;
  for (int y = 0; y < height; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < width; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < 3; ++c) {
        const double top = src.pixel(x0, y0)[c] * (1 - wx) + src.pixel(x1, y0)[c] * wx;
        const double bot = src.pixel(x0, y1)[c] * (1 - wx) + src.pixel(x1, y1)[c] * wx;
        dst.pixel(x, y)[c] = static_cast<std::uint8_t>(std::lround(top * (1 - wy) + bot * wy));
      }
    }
  }
  return dst;
}

/// Decodes an encoded image; only the built-in PPM codec is available.
inline Image decode_image(std::span<const std::uint8_t> bytes, std::string_view format) {
  if (format == "ppm") return decode_ppm(bytes);
  fail(ErrorKind::DecodeError, "no codec for image format \"" + std::string(format) + "\"");
}

/// Planar CHW floats in [0,1] at the requested size.
inline std::vector<float> to_model_input(const Image& img, int width, int height) {
  const Image r = resize_bilinear(img, width, height);
  std::vector<float> out(static_cast<std::size_t>(3) * width * height);
  const std::size_t plane = static_cast<std::size_t>(width) * height;
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      const auto* p = r.pixel(x, y);
      const std::size_t i = static_cast<std::size_t>(y) * width + x;
      for (int c = 0; c < 3; ++c) out[c * plane + i] = p[c] / 255.0f;
    }
  }
  return out;
}

}  // namespace signdet
