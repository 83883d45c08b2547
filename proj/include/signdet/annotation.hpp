#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "signdet/error.hpp"
#include "signdet/geometry.hpp"

namespace signdet {

/// Pixel-space box. Coordinates are pixel edges: 0 <= xmin < xmax <= width,
/// and dividing by the image extent gives the normalized box.
struct PixelBox {
  int xmin = 0;
  int ymin = 0;
  int xmax = 0;
  int ymax = 0;

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

struct AnnotatedObject {
  std::string name;
  PixelBox box;
  std::string pose = "Unspecified";
  bool truncated = false;
  bool difficult = false;

  friend bool operator==(const AnnotatedObject&, const AnnotatedObject&) = default;
};

struct Annotation {
  std::string folder;
  std::string filename;
  std::string path;
  std::string database = "Unknown";
  int width = 0;
  int height = 0;
  int depth = 3;
  bool segmented = false;
  std::vector<AnnotatedObject> objects;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct FieldError {
  std::string field;  // e.g. "object[0].bndbox"
  std::string message;
};

/// Every violated invariant, in document order.
inline std::vector<FieldError> annotation_errors(const Annotation& a) {
  std::vector<FieldError> errs;
  if (a.width <= 0 || a.height <= 0) errs.push_back({"size", "width and height must be positive"});
  if (a.depth <= 0) errs.push_back({"size", "depth must be positive"});
  for (std::size_t i = 0; i < a.objects.size(); ++i) {
    const auto& o = a.objects[i];
    const std::string where = "object[" + std::to_string(i) + "]";
    if (o.name.empty()) errs.push_back({where + ".name", "empty label"});
    const auto& b = o.box;
    if (!(b.xmin < b.xmax)) errs.push_back({where + ".bndbox", "xmin must be < xmax"});
    if (!(b.ymin < b.ymax)) errs.push_back({where + ".bndbox", "ymin must be < ymax"});
    if (b.xmin < 0 || b.ymin < 0 || b.xmax > a.width || b.ymax > a.height) {
      errs.push_back({where + ".bndbox", "box outside the " + std::to_string(a.width) + "x" +
                                             std::to_string(a.height) + " image"});
    }
  }
  return errs;
}

/// Throws ValidationError naming the first violated invariant.
inline void validate_annotation(const Annotation& a) {
  const auto errs = annotation_errors(a);
  if (!errs.empty()) fail(ErrorKind::ValidationError, errs.front().field + ": " + errs.front().message);
}

inline BoxCorner normalize_box(const PixelBox& b, int width, int height) {
  return {static_cast<double>(b.xmin) / width, static_cast<double>(b.ymin) / height,
          static_cast<double>(b.xmax) / width, static_cast<double>(b.ymax) / height};
}

}  // namespace signdet
