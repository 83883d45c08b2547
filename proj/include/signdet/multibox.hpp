#pragma once

// Anchor/ground-truth matching and the multibox training losses:
// smooth-L1 localization over matched anchors and softmax classification
// over matched anchors plus hard-mined negatives, both normalized by the
// number of matched anchors.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <tuple>
#include <vector>

#include "signdet/anchors.hpp"
#include "signdet/error.hpp"
#include "signdet/geometry.hpp"

namespace signdet {

struct GroundTruth {
  std::vector<BoxCorner> boxes;
  std::vector<int> class_ids;  // 1..C, 0 is background

  std::size_t size() const noexcept { return boxes.size(); }

  void validate(int num_classes) const {
    if (boxes.size() != class_ids.size()) {
      fail(ErrorKind::InvalidInput, "ground truth boxes and class ids differ in length");
    }
    for (std::size_t j = 0; j < boxes.size(); ++j) {
      if (!boxes[j].valid() || !(boxes[j].xmax > boxes[j].xmin) || !(boxes[j].ymax > boxes[j].ymin)) {
        fail(ErrorKind::DegenerateBox, "ground truth box " + std::to_string(j) + " is degenerate");
      }
      if (class_ids[j] < 1 || class_ids[j] > num_classes) {
        fail(ErrorKind::InvalidInput, "ground truth class id " + std::to_string(class_ids[j]) +
                                          " outside [1," + std::to_string(num_classes) + "]");
      }
    }
  }
};

struct MatchResult {
  static constexpr int kBackground = -1;

  std::vector<int> assignment;  // per anchor: gt index or kBackground
  std::size_t num_matched = 0;

  bool matched(std::size_t anchor) const { return assignment[anchor] != kBackground; }

  std::vector<std::size_t> positives() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (matched(i)) out.push_back(i);
    }
    return out;
  }

  std::vector<std::size_t> negative_candidates() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < assignment.size(); ++i) {
      if (!matched(i)) out.push_back(i);
    }
    return out;
  }
};

/// Per-anchor localization outputs and class logits (column 0 = background).
struct Predictions {
  std::vector<OffsetVector> loc;
  std::size_t num_logits = 0;
  std::vector<double> logits;

  Predictions() = default;
  Predictions(std::size_t anchors, std::size_t logits_per_anchor)
      : loc(anchors), num_logits(logits_per_anchor), logits(anchors * logits_per_anchor, 0.0) {}

  std::size_t size() const noexcept { return loc.size(); }
  std::span<const double> row(std::size_t i) const {
    return {logits.data() + i * num_logits, num_logits};
  }
  std::span<double> row(std::size_t i) { return {logits.data() + i * num_logits, num_logits}; }

  void check_shape(std::size_t anchors) const {
    if (loc.size() != anchors || logits.size() != anchors * num_logits || num_logits < 2) {
      fail(ErrorKind::ShapeError, "predictions do not match anchor count " + std::to_string(anchors));
    }
  }
};

struct LossBreakdown {
  double classification_loss = 0.0;
  double localization_loss = 0.0;
  double regularization_loss = 0.0;
  double total_loss = 0.0;
  double learning_rate = 0.0;
};

namespace detail {

// Canonical rank of each gt: order by (class, xmin, ymin, xmax, ymax) so
// tie-breaking does not depend on the order boxes were listed in.
inline std::vector<std::size_t> canonical_rank(const GroundTruth& gt) {
  std::vector<std::size_t> order(gt.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto key = [&](std::size_t j) {
    const auto& b = gt.boxes[j];
    return std::make_tuple(gt.class_ids[j], b.xmin, b.ymin, b.xmax, b.ymax);
  };
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return key(a) < key(b); });
  std::vector<std::size_t> rank(gt.size());
  for (std::size_t r = 0; r < order.size(); ++r) rank[order[r]] = r;
  return rank;
}

inline double log_sum_exp(std::span<const double> v) {
  const double m = *std::max_element(v.begin(), v.end());
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

inline void check_finite(const Predictions& preds) {
  for (const auto& l : preds.loc) {
    if (!l.finite()) fail(ErrorKind::NonFiniteResult, "non-finite localization prediction");
  }
  for (double x : preds.logits) {
    if (!std::isfinite(x)) fail(ErrorKind::NonFiniteResult, "non-finite class logit");
  }
}

inline std::size_t mined_count(double ratio, std::size_t positives, std::size_t available) {
  const auto wanted = static_cast<std::size_t>(std::floor(ratio * static_cast<double>(positives) + 1e-9));
  return std::min(wanted, available);
}

}  // namespace detail

/// Forced best anchor per gt (greedy on the global IoU maximum so two gts
/// never claim one anchor), then every remaining anchor whose best IoU
/// reaches the threshold.
inline MatchResult match_anchors(const AnchorSet& anchors, const GroundTruth& gt,
                                 double iou_threshold = 0.5) {
  if (anchors.empty()) fail(ErrorKind::InvalidInput, "cannot match against an empty anchor set");
  if (!(iou_threshold > 0.0 && iou_threshold < 1.0)) {
    fail(ErrorKind::InvalidInput, "iou threshold must lie in (0,1)");
  }
  if (gt.boxes.size() != gt.class_ids.size()) {
    fail(ErrorKind::InvalidInput, "ground truth boxes and class ids differ in length");
  }
  const std::size_t na = anchors.size();
  const std::size_t ng = gt.size();
  MatchResult result;
  result.assignment.assign(na, MatchResult::kBackground);
  if (ng == 0) return result;

  const auto rank = detail::canonical_rank(gt);
  std::vector<BoxCorner> corners(na);
  for (std::size_t i = 0; i < na; ++i) corners[i] = center_to_corner(anchors[i]);
  std::vector<double> overlap(na * ng);
  for (std::size_t i = 0; i < na; ++i) {
    for (std::size_t j = 0; j < ng; ++j) overlap[i * ng + j] = iou(corners[i], gt.boxes[j]);
  }

  std::vector<bool> gt_done(ng, false);
  for (std::size_t round = 0; round < std::min(na, ng); ++round) {
    std::size_t best_i = na, best_j = ng;
    double best = -1.0;
    for (std::size_t i = 0; i < na; ++i) {
      if (result.assignment[i] != MatchResult::kBackground) continue;
      for (std::size_t j = 0; j < ng; ++j) {
        if (gt_done[j]) continue;
        const double v = overlap[i * ng + j];
        if (v > best || (v == best && i == best_i && rank[j] < rank[best_j])) {
          best = v;
          best_i = i;
          best_j = j;
        }
      }
    }
    result.assignment[best_i] = static_cast<int>(best_j);
    gt_done[best_j] = true;
  }

  for (std::size_t i = 0; i < na; ++i) {
    if (result.assignment[i] != MatchResult::kBackground) continue;
    std::size_t best_j = ng;
    double best = -1.0;
    for (std::size_t j = 0; j < ng; ++j) {
      const double v = overlap[i * ng + j];
      if (v > best || (v == best && rank[j] < rank[best_j])) {
        best = v;
        best_j = j;
      }
    }
    if (best >= iou_threshold) result.assignment[i] = static_cast<int>(best_j);
  }
  result.num_matched = static_cast<std::size_t>(
      std::count_if(result.assignment.begin(), result.assignment.end(),
                    [](int a) { return a != MatchResult::kBackground; }));
  return result;
}

/// Numerically stable softmax (max subtraction).
inline std::vector<double> softmax_scores(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double m = *std::max_element(logits.begin(), logits.end());
  double s = 0.0;
  for (std::size_t q = 0; q < logits.size(); ++q) {
    out[q] = std::exp(logits[q] - m);
    s += out[q];
  }
  for (double& v : out) v /= s;
  return out;
}

/// Unmatched anchors with the largest background negative log-likelihood,
/// at most floor(ratio * N) of them; ties go to the lower anchor index.
inline std::vector<std::size_t> select_hard_negatives(const MatchResult& match,
                                                      const Predictions& preds,
                                                      double neg_pos_ratio) {
  auto candidates = match.negative_candidates();
  const std::size_t k = detail::mined_count(neg_pos_ratio, match.num_matched, candidates.size());
  if (k == 0) return {};
  std::vector<double> nll(preds.size(), 0.0);
  for (std::size_t i : candidates) nll[i] = detail::log_sum_exp(preds.row(i)) - preds.row(i)[0];
  std::stable_sort(candidates.begin(), candidates.end(),
                   [&](std::size_t a, std::size_t b) { return nll[a] > nll[b]; });
  candidates.resize(k);
  std::sort(candidates.begin(), candidates.end());
  return candidates;
}

struct MultiboxConfig {
  double iou_threshold = 0.5;
  double neg_pos_ratio = 3.0;
  OffsetScale offset_scale{};
};

/// Loss values for one image together with their gradients with respect to
/// every prediction.
struct MultiboxLoss {
  double localization = 0.0;
  double classification = 0.0;
  std::vector<OffsetVector> grad_loc;
  std::vector<double> grad_logits;
};

/// Localization targets for the matched anchors (zero for background).
inline std::vector<OffsetVector> encode_targets(const MatchResult& match, const GroundTruth& gt,
                                                const AnchorSet& anchors,
                                                const OffsetScale& scale = {}) {
  std::vector<OffsetVector> targets(anchors.size());
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!match.matched(i)) continue;
    const auto j = static_cast<std::size_t>(match.assignment[i]);
    targets[i] = encode_box(corner_to_center(gt.boxes[j]), anchors[i], scale);
  }
  return targets;
}

/// Both multibox losses and their gradients given precomputed targets.
inline MultiboxLoss multibox_loss(const MatchResult& match, const Predictions& preds,
                                  const GroundTruth& gt, const std::vector<OffsetVector>& targets,
                                  double neg_pos_ratio) {
  const std::size_t na = match.assignment.size();
  preds.check_shape(na);
  if (targets.size() != na) fail(ErrorKind::ShapeError, "target count differs from anchor count");
  if (!(neg_pos_ratio > 0.0)) fail(ErrorKind::InvalidInput, "negative:positive ratio must be > 0");
  detail::check_finite(preds);

  MultiboxLoss out;
  out.grad_loc.assign(na, OffsetVector{});
  out.grad_logits.assign(preds.logits.size(), 0.0);
  if (match.num_matched == 0) return out;
  const double inv_n = 1.0 / static_cast<double>(match.num_matched);

  auto add_softmax_term = [&](std::size_t i, std::size_t cls) {
    const auto row = preds.row(i);
    const double lse = detail::log_sum_exp(row);
    out.classification += lse - row[cls];
    for (std::size_t q = 0; q < row.size(); ++q) {
      const double p = std::exp(row[q] - lse);
      out.grad_logits[i * preds.num_logits + q] += (p - (q == cls ? 1.0 : 0.0)) * inv_n;
    }
  };

  for (std::size_t i = 0; i < na; ++i) {
    if (!match.matched(i)) continue;
    const auto j = static_cast<std::size_t>(match.assignment[i]);
    for (std::size_t m = 0; m < 4; ++m) {
      const double r = preds.loc[i][m] - targets[i][m];
      out.localization += smooth_l1(r);
      out.grad_loc[i][m] = smooth_l1_grad(r) * inv_n;
    }
    const auto cls = static_cast<std::size_t>(gt.class_ids[j]);
    if (cls >= preds.num_logits) fail(ErrorKind::ShapeError, "class id exceeds logit count");
    add_softmax_term(i, cls);
  }
  for (std::size_t i : select_hard_negatives(match, preds, neg_pos_ratio)) add_softmax_term(i, 0);

  out.localization *= inv_n;
  out.classification *= inv_n;
  return out;
}

inline double localization_loss(const MatchResult& match, const Predictions& preds,
                                const GroundTruth& gt, const AnchorSet& anchors,
                                const OffsetScale& scale = {}) {
  preds.check_shape(anchors.size());
  detail::check_finite(preds);
  if (match.num_matched == 0) return 0.0;
  const auto targets = encode_targets(match, gt, anchors, scale);
  double sum = 0.0;
  for (std::size_t i = 0; i < anchors.size(); ++i) {
    if (!match.matched(i)) continue;
    for (std::size_t m = 0; m < 4; ++m) sum += smooth_l1(preds.loc[i][m] - targets[i][m]);
  }
  return sum / static_cast<double>(match.num_matched);
}

inline double classification_loss(const MatchResult& match, const Predictions& preds,
                                  const GroundTruth& gt, double neg_pos_ratio = 3.0) {
  const std::vector<OffsetVector> zero(match.assignment.size());
  // Localization residuals do not feed into the classification term.
  return multibox_loss(match, preds, gt, zero, neg_pos_ratio).classification;
}

/// weight_decay * sum(w^2) / 2 over every weight tensor (biases are not
/// passed in).
template <typename TensorRange>
double regularization_loss(const TensorRange& weight_tensors, double weight_decay) {
  if (!(weight_decay >= 0.0)) fail(ErrorKind::InvalidInput, "weight decay must be >= 0");
  double sum = 0.0;
  for (const auto& tensor : weight_tensors) {
    for (const auto w : tensor) sum += static_cast<double>(w) * static_cast<double>(w);
  }
  return weight_decay * sum / 2.0;
}

inline LossBreakdown total_loss(double cls, double loc, double reg, double learning_rate = 0.0) {
  for (double v : {cls, loc, reg}) {
    if (!std::isfinite(v) || v < 0.0) fail(ErrorKind::InvalidInput, "loss components must be finite and >= 0");
  }
  return {cls, loc, reg, cls + loc + reg, learning_rate};
}

}  // namespace signdet
