#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "signdet/error.hpp"
#include "signdet/geometry.hpp"

namespace signdet {

struct AnchorLayer {
  int grid_w = 1;
  int grid_h = 1;
  std::vector<double> scales;
  std::vector<double> aspect_ratios;

  friend bool operator==(const AnchorLayer&, const AnchorLayer&) = default;
};

struct AnchorSpec {
  std::vector<AnchorLayer> layers;
  /// Adds one square anchor per cell at scale sqrt(s_last * s_next), where
  /// s_next is the next layer's first scale (1.0 after the last layer).
  bool add_interpolated_scale = false;
  bool clip_to_image = false;

  /// Two layers sized for the 96x96 tiny network (strides 8 and 16).
  static AnchorSpec desk_default() {
    AnchorSpec spec;
    spec.layers.push_back({12, 12, {0.2}, {1.0, 2.0, 0.5}});
    spec.layers.push_back({6, 6, {0.5}, {1.0, 2.0, 0.5}});
    spec.add_interpolated_scale = true;
    return spec;
  }

  std::size_t anchors_per_cell(std::size_t layer) const {
    const auto& l = layers.at(layer);
    return l.scales.size() * l.aspect_ratios.size() + (add_interpolated_scale ? 1 : 0);
  }

  void validate() const {
    if (layers.empty()) fail(ErrorKind::InvalidSpec, "anchor spec has no layers");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      const std::string where = "anchor layer " + std::to_string(i);
      if (l.grid_w <= 0 || l.grid_h <= 0) fail(ErrorKind::InvalidSpec, where + ": grid must be positive");
      if (l.scales.empty()) fail(ErrorKind::InvalidSpec, where + ": no scales");
      if (l.aspect_ratios.empty()) fail(ErrorKind::InvalidSpec, where + ": no aspect ratios");
      for (double s : l.scales) {
        if (!(s > 0.0 && s <= 1.0)) fail(ErrorKind::InvalidSpec, where + ": scale outside (0,1]");
      }
      for (double r : l.aspect_ratios) {
        if (!(r > 0.0) || !std::isfinite(r)) fail(ErrorKind::InvalidSpec, where + ": aspect ratio must be > 0");
      }
    }
  }

  friend bool operator==(const AnchorSpec&, const AnchorSpec&) = default;
};

/// Immutable default boxes in deterministic order: layer, row, column, scale,
/// ratio, then the interpolated extra.
class AnchorSet {
 public:
  AnchorSet() = default;
  AnchorSet(std::vector<BoxCenter> boxes, std::vector<std::size_t> layer_offsets)
      : boxes_(std::move(boxes)), layer_offsets_(std::move(layer_offsets)) {}

  std::size_t size() const noexcept { return boxes_.size(); }
  bool empty() const noexcept { return boxes_.empty(); }
  const BoxCenter& operator[](std::size_t i) const { return boxes_[i]; }
  const std::vector<BoxCenter>& boxes() const noexcept { return boxes_; }
  /// Index of the first anchor of each layer, plus a trailing total.
  const std::vector<std::size_t>& layer_offsets() const noexcept { return layer_offsets_; }

  auto begin() const noexcept { return boxes_.begin(); }
  auto end() const noexcept { return boxes_.end(); }

 private:
  std::vector<BoxCenter> boxes_;
  std::vector<std::size_t> layer_offsets_;
};

inline AnchorSet generate_anchors(const AnchorSpec& spec) {
  spec.validate();
  std::vector<BoxCenter> boxes;
  std::vector<std::size_t> offsets;
  for (std::size_t li = 0; li < spec.layers.size(); ++li) {
    const auto& layer = spec.layers[li];
    offsets.push_back(boxes.size());
    const double next_scale = li + 1 < spec.layers.size() ? spec.layers[li + 1].scales.front() : 1.0;
    const double extra_scale = std::sqrt(layer.scales.back() * next_scale);
    for (int row = 0; row < layer.grid_h; ++row) {
      for (int col = 0; col < layer.grid_w; ++col) {
        const double cx = (col + 0.5) / layer.grid_w;
        const double cy = (row + 0.5) / layer.grid_h;
        auto push = [&](double s, double r) {
          const double sr = std::sqrt(r);
          BoxCenter b{cx, cy, s * sr, s / sr};
          if (spec.clip_to_image) b = corner_to_center(clip_unit(center_to_corner(b)));
          boxes.push_back(b);
        };
        for (double s : layer.scales) {
          for (double r : layer.aspect_ratios) push(s, r);
        }
        if (spec.add_interpolated_scale) push(extra_scale, 1.0);
      }
    }
  }
  offsets.push_back(boxes.size());
  return AnchorSet(std::move(boxes), std::move(offsets));
}

}  // namespace signdet
