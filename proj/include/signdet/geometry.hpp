#pragma once

// Normalized bounding-box geometry shared by matching, losses and inference.
// All coordinates are fractions of the image extent; pixel coordinates only
// show up at the annotation and UI boundaries.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>

#include "signdet/error.hpp"

namespace signdet {

struct BoxCorner {
  double xmin = 0.0;
  double ymin = 0.0;
  double xmax = 0.0;
  double ymax = 0.0;

  double width() const noexcept { return xmax - xmin; }
  double height() const noexcept { return ymax - ymin; }
  double area() const noexcept { return std::max(0.0, width()) * std::max(0.0, height()); }

  bool valid() const noexcept {
    return std::isfinite(xmin) && std::isfinite(ymin) && std::isfinite(xmax) &&
           std::isfinite(ymax) && xmin <= xmax && ymin <= ymax;
  }

  friend bool operator==(const BoxCorner&, const BoxCorner&) = default;
};

struct BoxCenter {
  double cx = 0.0;
  double cy = 0.0;
  double w = 0.0;
  double h = 0.0;

  bool valid() const noexcept {
    return std::isfinite(cx) && std::isfinite(cy) && std::isfinite(w) && std::isfinite(h) &&
           w > 0.0 && h > 0.0;
  }

  friend bool operator==(const BoxCenter&, const BoxCenter&) = default;
};

/// Encoded regression target (or prediction) of a box relative to an anchor.
struct OffsetVector {
  double t_cx = 0.0;
  double t_cy = 0.0;
  double t_w = 0.0;
  double t_h = 0.0;

  double operator[](std::size_t m) const noexcept {
    switch (m) {
      case 0: return t_cx;
      case 1: return t_cy;
      case 2: return t_w;
      default: return t_h;
    }
  }
  double& operator[](std::size_t m) noexcept {
    switch (m) {
      case 0: return t_cx;
      case 1: return t_cy;
      case 2: return t_w;
      default: return t_h;
    }
  }

  bool finite() const noexcept {
    return std::isfinite(t_cx) && std::isfinite(t_cy) && std::isfinite(t_w) && std::isfinite(t_h);
  }

  friend bool operator==(const OffsetVector&, const OffsetVector&) = default;
};

/// Optional per-component divisor applied after encoding (and undone before
/// decoding). Identity by default.
struct OffsetScale {
  std::array<double, 4> divisor{1.0, 1.0, 1.0, 1.0};
};

inline BoxCenter corner_to_center(const BoxCorner& b) {
  if (!b.valid()) fail(ErrorKind::DegenerateBox, "corner box is not finite or inverted");
  if (!(b.xmax > b.xmin) || !(b.ymax > b.ymin)) {
    fail(ErrorKind::DegenerateBox, "corner box has zero area");
  }
  return {(b.xmin + b.xmax) / 2.0, (b.ymin + b.ymax) / 2.0, b.xmax - b.xmin, b.ymax - b.ymin};
}

inline BoxCorner center_to_corner(const BoxCenter& b) {
  return {b.cx - b.w / 2.0, b.cy - b.h / 2.0, b.cx + b.w / 2.0, b.cy + b.h / 2.0};
}

inline BoxCorner clip_unit(const BoxCorner& b) noexcept {
  auto c = [](double v) { return std::clamp(v, 0.0, 1.0); };
  return {c(b.xmin), c(b.ymin), c(b.xmax), c(b.ymax)};
}

/// Intersection over union. Zero-area or disjoint inputs give 0.
inline double iou(const BoxCorner& a, const BoxCorner& b) noexcept {
  const double iw = std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin);
  const double ih = std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin);
  if (iw <= 0.0 || ih <= 0.0) return 0.0;
  const double inter = iw * ih;
  const double uni = a.area() + b.area() - inter;
  if (uni <= 0.0) return 0.0;
  return std::clamp(inter / uni, 0.0, 1.0);
}

inline OffsetVector encode_box(const BoxCenter& g, const BoxCenter& d,
                               const OffsetScale& scale = {}) {
  if (!g.valid()) fail(ErrorKind::DegenerateBox, "ground-truth box needs positive width and height");
  if (!d.valid()) fail(ErrorKind::DegenerateBox, "default box needs positive width and height");
  OffsetVector t{(g.cx - d.cx) / d.w, (g.cy - d.cy) / d.h, std::log(g.w / d.w),
                 std::log(g.h / d.h)};
  for (std::size_t m = 0; m < 4; ++m) t[m] /= scale.divisor[m];
  return t;
}

inline BoxCenter decode_box(const OffsetVector& t, const BoxCenter& d,
                            const OffsetScale& scale = {}) {
  if (!d.valid()) fail(ErrorKind::DegenerateBox, "default box needs positive width and height");
  OffsetVector s = t;
  for (std::size_t m = 0; m < 4; ++m) s[m] *= scale.divisor[m];
  BoxCenter out{s.t_cx * d.w + d.cx, s.t_cy * d.h + d.cy, d.w * std::exp(s.t_w),
                d.h * std::exp(s.t_h)};
  if (!std::isfinite(out.cx) || !std::isfinite(out.cy) || !std::isfinite(out.w) ||
      !std::isfinite(out.h)) {
    fail(ErrorKind::NonFiniteResult, "decoded box is not finite");
  }
  return out;
}

/// Decode straight to a corner box clipped to the unit square.
inline BoxCorner decode_box_clipped(const OffsetVector& t, const BoxCenter& d,
                                    const OffsetScale& scale = {}) {
  return clip_unit(center_to_corner(decode_box(t, d, scale)));
}

inline double smooth_l1(double x) noexcept {
  const double a = std::abs(x);
  return a < 1.0 ? 0.5 * x * x : a - 0.5;
}

/// Derivative of smooth_l1; lies in [-1, 1].
inline double smooth_l1_grad(double x) noexcept { return std::clamp(x, -1.0, 1.0); }

}  // namespace signdet
