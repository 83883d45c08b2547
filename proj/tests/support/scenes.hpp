#pragma once

#include "signdet/anchors.hpp"
#include "signdet/multibox.hpp"
#include "signdet/random.hpp"

struct LossScene {
  signdet::AnchorSet anchors;
  signdet::GroundTruth gt;
  signdet::Predictions preds;
};

inline signdet::BoxCorner random_unit_box(signdet::Rng& rng, double min_side = 0.05) {
  const double w = rng.uniform(min_side, 0.8), h = rng.uniform(min_side, 0.8);
  const double x = rng.uniform(0.0, 1.0 - w), y = rng.uniform(0.0, 1.0 - h);
  return {x, y, x + w, y + h};
}

/// Up to max_anchors anchors, up to max_gt ground-truth boxes (possibly
/// none), and random predictions over `classes` foreground classes.
inline LossScene random_loss_scene(signdet::Rng& rng, int max_anchors = 10, int max_gt = 3, int classes = 4) {
  LossScene s;
  const int na = rng.range(1, max_anchors);
  std::vector<signdet::BoxCenter> boxes;
  for (int i = 0; i < na; ++i) boxes.push_back(signdet::corner_to_center(random_unit_box(rng)));
  s.anchors = signdet::AnchorSet(boxes, {0, boxes.size()});
  const int ng = rng.range(0, max_gt);
  for (int j = 0; j < ng; ++j) {
    s.gt.boxes.push_back(random_unit_box(rng));
    s.gt.class_ids.push_back(rng.range(1, classes));
  }
  s.preds = signdet::Predictions(boxes.size(), static_cast<std::size_t>(classes) + 1);
  for (auto& l : s.preds.loc) l = {rng.normal(), rng.normal(), rng.normal() * 0.5, rng.normal() * 0.5};
  for (auto& v : s.preds.logits) v = rng.normal() * 2.0;
  return s;
}
