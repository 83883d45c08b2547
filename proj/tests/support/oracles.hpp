#pragma once

// Reference implementations used only by the tests. Each one is written
// from the defining formula, deliberately without reusing library code
// beyond plain data types.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <vector>

#include <boost/crc.hpp>

#include "signdet/geometry.hpp"
#include "signdet/multibox.hpp"

namespace oracle {

inline long double huber(long double x) {
  const long double a = std::fabs(x);
  return a < 1 ? 0.5L * a * a : a - 0.5L;
}

inline long double log_softmax(std::span<const double> logits, std::size_t k) {
  long double m = logits[0];
  for (double v : logits) m = std::max<long double>(m, v);
  long double z = 0;
  for (double v : logits) z += std::exp(static_cast<long double>(v) - m);
  return static_cast<long double>(logits[k]) - m - std::log(z);
}

/// Sum over positive anchors and the four offsets of the smooth-L1
/// residual against freshly encoded targets, over N.
inline double localization_loss(const signdet::MatchResult& match, const signdet::Predictions& preds,
                                 const signdet::GroundTruth& gt, const signdet::AnchorSet& anchors) {
  long double sum = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < match.assignment.size(); ++i) {
    const int j = match.assignment[i];
    if (j < 0) continue;
    ++n;
    const auto& d = anchors[i];
    const auto& g = gt.boxes[static_cast<std::size_t>(j)];
    const long double dw = d.w, dh = d.h, dcx = d.cx, dcy = d.cy;
    const long double gw = g.xmax - g.xmin, gh = g.ymax - g.ymin;
    const long double gcx = (g.xmin + g.xmax) / 2.0L, gcy = (g.ymin + g.ymax) / 2.0L;
    const long double target[4] = {(gcx - dcx) / dw, (gcy - dcy) / dh, std::log(gw / dw), std::log(gh / dh)};
    for (int m = 0; m < 4; ++m) sum += huber(preds.loc[i][static_cast<std::size_t>(m)] - target[m]);
  }
  return n == 0 ? 0.0 : static_cast<double>(sum / n);
}

/// Softmax cross-entropy over positives plus the mined negatives, over N.
/// The negative set is found by enumerating every subset of the mandated
/// size and keeping the one with the largest summed background loss
/// (lexicographically first on ties).
inline double classification_loss(const signdet::MatchResult& match, const signdet::Predictions& preds,
                                   const signdet::GroundTruth& gt, double ratio) {
  std::vector<std::size_t> pos, cand;
  for (std::size_t i = 0; i < match.assignment.size(); ++i) {
    (match.assignment[i] >= 0 ? pos : cand).push_back(i);
  }
  if (pos.empty()) return 0.0;
  const std::size_t want =
      std::min(cand.size(), static_cast<std::size_t>(std::floor(ratio * static_cast<double>(pos.size()) + 1e-9)));
  std::vector<long double> bg(cand.size());
  for (std::size_t k = 0; k < cand.size(); ++k) bg[k] = -log_softmax(preds.row(cand[k]), 0);

  long double best = -1;
  std::vector<bool> choice(cand.size(), false);
  std::vector<bool> mask(cand.size(), false);
  std::fill(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(want), true);
  do {
    long double s = 0;
    for (std::size_t k = 0; k < cand.size(); ++k) {
      if (mask[k]) s += bg[k];
    }
    if (s > best + 1e-15L) {
      best = s;
      choice = mask;
    }
  } while (std::prev_permutation(mask.begin(), mask.end()));

  long double sum = 0;
  for (std::size_t i : pos) {
    const int cls = gt.class_ids[static_cast<std::size_t>(match.assignment[i])];
    sum -= log_softmax(preds.row(i), static_cast<std::size_t>(cls));
  }
  for (std::size_t k = 0; k < cand.size(); ++k) {
    if (choice[k]) sum += bg[k];
  }
  return static_cast<double>(sum / static_cast<long double>(pos.size()));
}

/// Area overlap by counting cell centres of an n x n grid over [lo, hi]^2.
inline double grid_iou(const signdet::BoxCorner& a, const signdet::BoxCorner& b, double lo, double hi, int n) {
  std::int64_t inter = 0, uni = 0;
  const double step = (hi - lo) / n;
  for (int yi = 0; yi < n; ++yi) {
    const double y = lo + (yi + 0.5) * step;
    for (int xi = 0; xi < n; ++xi) {
      const double x = lo + (xi + 0.5) * step;
      const bool in_a = x > a.xmin && x < a.xmax && y > a.ymin && y < a.ymax;
      const bool in_b = x > b.xmin && x < b.xmax && y > b.ymin && y < b.ymax;
      inter += in_a && in_b;
      uni += in_a || in_b;
    }
  }
  return uni == 0 ? 0.0 : static_cast<double>(inter) / static_cast<double>(uni);
}

inline double plain_iou(const signdet::BoxCorner& a, const signdet::BoxCorner& b) {
  const double w = std::max(0.0, std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin));
  const double h = std::max(0.0, std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin));
  const double i = w * h;
  const double u = (a.xmax - a.xmin) * (a.ymax - a.ymin) + (b.xmax - b.xmin) * (b.ymax - b.ymin) - i;
  return u <= 0 ? 0.0 : i / u;
}

/// Classic suppression-flag NMS, quadratic in the number of boxes.
inline std::vector<std::size_t> nms(const std::vector<signdet::BoxCorner>& boxes, const std::vector<double>& scores,
                                    double thr) {
  std::vector<std::size_t> order(boxes.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] != scores[b] ? scores[a] > scores[b] : a < b;
  });
  std::vector<bool> dead(boxes.size(), false);
  std::vector<std::size_t> kept;
  for (std::size_t r = 0; r < order.size(); ++r) {
    const std::size_t i = order[r];
    if (dead[i]) continue;
    kept.push_back(i);
    for (std::size_t s = r + 1; s < order.size(); ++s) {
      if (plain_iou(boxes[i], boxes[order[s]]) > thr) dead[order[s]] = true;
    }
  }
  return kept;
}

/// Base-128 little-endian groups, high bit set on all but the last.
inline std::vector<std::uint8_t> varint(std::uint64_t v) {
  std::vector<std::uint8_t> out;
  do {
    std::uint8_t group = static_cast<std::uint8_t>(v % 128);
    v /= 128;
    if (v != 0) group += 128;
    out.push_back(group);
  } while (v != 0);
  return out;
}

inline std::uint32_t crc32c(std::span<const std::uint8_t> bytes) {
  boost::crc_optimal<32, 0x1EDC6F41, 0xFFFFFFFF, 0xFFFFFFFF, true, true> crc;
  crc.process_bytes(bytes.data(), bytes.size());
  return crc.checksum();
}

inline std::uint32_t masked(std::uint32_t c) {
  const std::uint64_t rotated = ((c >> 15) | (static_cast<std::uint64_t>(c) << 17)) & 0xFFFFFFFFull;
  return static_cast<std::uint32_t>((rotated + 0xa282ead8ull) % (1ull << 32));
}

}  // namespace oracle
