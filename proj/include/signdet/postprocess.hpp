#pragma once

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "signdet/anchors.hpp"
#include "signdet/error.hpp"
#include "signdet/geometry.hpp"
#include "signdet/multibox.hpp"

namespace signdet {

struct Detection {
  BoxCorner box;  // normalized, clipped to the unit square
  int class_id = 0;
  double score = 0.0;
};

struct PostprocessConfig {
  double score_threshold = 0.5;
  double nms_iou = 0.6;
  std::size_t max_detections = 100;
  OffsetScale offset_scale{};
};

/// Greedy NMS: visit boxes by descending score (ties: lower index first),
/// keep a box unless it overlaps an already kept box by more than the
/// threshold. Returns kept indices in visiting order.
inline std::vector<std::size_t> nms(std::span<const BoxCorner> boxes, std::span<const double> scores,
                                    double iou_threshold, std::size_t max_keep) {
  if (boxes.size() != scores.size()) fail(ErrorKind::InvalidInput, "nms: boxes and scores differ in length");
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0)) fail(ErrorKind::InvalidInput, "nms: threshold must lie in (0,1]");
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  std::vector<std::size_t> kept;
  for (std::size_t i : order) {
    if (kept.size() >= max_keep) break;
    const bool suppressed = std::any_of(kept.begin(), kept.end(),
                                        [&](std::size_t k) { return iou(boxes[i], boxes[k]) > iou_threshold; });
    if (!suppressed) kept.push_back(i);
  }
  return kept;
}

/// Softmax, per-class thresholding, decoding, per-class NMS, then a global
/// sort by score truncated to max_detections.
inline std::vector<Detection> postprocess(const Predictions& preds, const AnchorSet& anchors,
                                          const PostprocessConfig& cfg = {}) {
  preds.check_shape(anchors.size());
  const std::size_t classes = preds.num_logits;
  std::vector<std::vector<double>> probs(preds.size());
  for (std::size_t i = 0; i < preds.size(); ++i) probs[i] = softmax_scores(preds.row(i));

  std::vector<Detection> all;
  for (std::size_t c = 1; c < classes; ++c) {
    std::vector<BoxCorner> boxes;
    std::vector<double> scores;
    for (std::size_t i = 0; i < preds.size(); ++i) {
      if (probs[i][c] < cfg.score_threshold) continue;
      boxes.push_back(decode_box_clipped(preds.loc[i], anchors[i], cfg.offset_scale));
      scores.push_back(probs[i][c]);
    }
    if (boxes.empty()) continue;
    for (std::size_t k : nms(boxes, scores, cfg.nms_iou, cfg.max_detections)) {
      all.push_back({boxes[k], static_cast<int>(c), scores[k]});
    }
  }
  std::stable_sort(all.begin(), all.end(), [](const Detection& a, const Detection& b) { return a.score > b.score; });
  if (all.size() > cfg.max_detections) all.resize(cfg.max_detections);
  return all;
}

}  // namespace signdet
