#pragma once

// Synthetic "sign" scenes for desk-scale runs: 1-3 filled shapes on gray
// noise. The class decides shape and color, so a detector has something
// learnable; boxes are the tight pixel bounds of what was drawn.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "signdet/annotation.hpp"
#include "signdet/error.hpp"
#include "signdet/image.hpp"
#include "signdet/random.hpp"

namespace signdet {

enum class ShapeKind { Rectangle, Ellipse, Triangle, Diamond, Cross };

inline constexpr std::array<std::array<std::uint8_t, 3>, 6> kShapePalette{{
    {230, 40, 40},
    {40, 200, 60},
    {50, 80, 230},
    {230, 210, 40},
    {200, 50, 220},
    {40, 210, 220},
}};

inline ShapeKind shape_of_class(int class_id) { return static_cast<ShapeKind>((class_id - 1) % 5); }
inline const std::array<std::uint8_t, 3>& color_of_class(int class_id) {
  return kShapePalette[static_cast<std::size_t>((class_id - 1) % 6)];
}

/// Default display name of synthetic class k: "A".."Z", then "K27"...
inline std::string synthetic_class_name(int class_id) {
  if (class_id >= 1 && class_id <= 26) return std::string(1, static_cast<char>('A' + class_id - 1));
  return "K" + std::to_string(class_id);
}

struct SyntheticOptions {
  int width = 96;
  int height = 96;
  int min_objects = 1;
  int max_objects = 3;
  double min_extent = 0.18;  // fraction of the image side
  double max_extent = 0.55;
  /// Class of the first object; random when unset.
  std::optional<int> first_class;
  std::vector<std::string> class_names;  // index k-1 names class k
};

struct SyntheticScene {
  Image image;
  Annotation annotation;
  std::vector<int> class_ids;
};

namespace detail {

inline bool shape_covers(ShapeKind kind, double u, double v) {
  // u, v in [0,1] across the shape's box.
  const double du = u - 0.5, dv = v - 0.5;
  switch (kind) {
    case ShapeKind::Rectangle: return true;
    case ShapeKind::Ellipse: return du * du + dv * dv <= 0.25;
    case ShapeKind::Triangle: return std::abs(du) <= 0.5 * v;
    case ShapeKind::Diamond: return std::abs(du) + std::abs(dv) <= 0.5;
    case ShapeKind::Cross: return std::abs(du) <= 1.0 / 6.0 || std::abs(dv) <= 1.0 / 6.0;
  }
  return false;
}

}  // namespace detail

inline SyntheticScene gen_synthetic_scene(Rng& rng, int class_count, const SyntheticOptions& opt = {}) {
  if (class_count < 1) fail(ErrorKind::InvalidInput, "synthetic scenes need at least one class");
  if (opt.width < 16 || opt.height < 16) fail(ErrorKind::InvalidInput, "synthetic image too small");
  SyntheticScene scene;
  scene.image = Image(opt.width, opt.height);
  for (int y = 0; y < opt.height; ++y) {
    for (int x = 0; x < opt.width; ++x) {
      const auto g = static_cast<std::uint8_t>(rng.range(70, 170));
      auto* p = scene.image.pixel(x, y);
      p[0] = p[1] = p[2] = g;
    }
  }
  scene.annotation.width = opt.width;
  scene.annotation.height = opt.height;
  scene.annotation.depth = 3;

  const int wanted = rng.range(opt.min_objects, std::max(opt.min_objects, opt.max_objects));
  std::vector<PixelBox> placed;
  for (int n = 0; n < wanted; ++n) {
    const int cls = (n == 0 && opt.first_class) ? *opt.first_class : rng.range(1, class_count);
    std::optional<PixelBox> slot;
    for (int attempt = 0; attempt < 30 && !slot; ++attempt) {
      const int w = std::max(4, static_cast<int>(std::lround(rng.uniform(opt.min_extent, opt.max_extent) * opt.width)));
      const int h = std::max(4, static_cast<int>(std::lround(rng.uniform(opt.min_extent, opt.max_extent) * opt.height)));
      const int x0 = rng.range(0, opt.width - w);
      const int y0 = rng.range(0, opt.height - h);
      PixelBox cand{x0, y0, x0 + w, y0 + h};
      const bool clear = std::none_of(placed.begin(), placed.end(), [&](const PixelBox& b) {
        return cand.xmin < b.xmax + 2 && b.xmin < cand.xmax + 2 && cand.ymin < b.ymax + 2 && b.ymin < cand.ymax + 2;
      });
      if (clear) slot = cand;
    }
    if (!slot) {
      if (n == 0) fail(ErrorKind::InvalidInput, "could not place a synthetic shape");
      break;
    }
    placed.push_back(*slot);

    const auto kind = shape_of_class(cls);
    const auto& color = color_of_class(cls);
    const int w = slot->xmax - slot->xmin, h = slot->ymax - slot->ymin;
    PixelBox tight{opt.width, opt.height, -1, -1};
    for (int y = slot->ymin; y < slot->ymax; ++y) {
      for (int x = slot->xmin; x < slot->xmax; ++x) {
        const double u = (x - slot->xmin + 0.5) / w;
        const double v = (y - slot->ymin + 0.5) / h;
        if (!detail::shape_covers(kind, u, v)) continue;
        auto* p = scene.image.pixel(x, y);
        p[0] = color[0];
        p[1] = color[1];
        p[2] = color[2];
        tight.xmin = std::min(tight.xmin, x);
        tight.ymin = std::min(tight.ymin, y);
        tight.xmax = std::max(tight.xmax, x + 1);
        tight.ymax = std::max(tight.ymax, y + 1);
      }
    }
    AnnotatedObject obj;
    obj.name = cls <= static_cast<int>(opt.class_names.size()) ? opt.class_names[static_cast<std::size_t>(cls - 1)]
                                                                : synthetic_class_name(cls);
    obj.box = tight;
    scene.annotation.objects.push_back(obj);
    scene.class_ids.push_back(cls);
  }
  return scene;
}

}  // namespace signdet
