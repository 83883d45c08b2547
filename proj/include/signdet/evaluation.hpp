#pragma once

// Confidence-rate evaluation. For every validation image and every class
// present in its ground truth, the image scores the highest detection score
// reported for that class (0 when there is none). A class's rate is the mean
// over its images, in percent; the average runs over classes that have at
// least one image.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "signdet/annotation.hpp"
#include "signdet/error.hpp"
#include "signdet/image.hpp"
#include "signdet/label_map.hpp"
#include "signdet/postprocess.hpp"
#include "signdet/tinynet.hpp"

namespace signdet {

using Detector = std::function<std::vector<Detection>(const Image&)>;

/// Resize, forward, postprocess.
inline Detector make_detector(const TinyNet<float>& model, PostprocessConfig cfg = {}) {
  return [&model, cfg](const Image& img) {
    const auto& mc = model.config();
    const auto input = to_model_input(img, mc.input_width, mc.input_height);
    return postprocess(model.infer(input), model.anchors(), cfg);
  };
}

struct EvalSample {
  Image image;
  Annotation truth;
};

struct EvalReport {
  std::vector<std::string> labels;          // label-map order
  std::vector<std::optional<double>> rates;  // percent; empty when a class has no samples
  std::vector<std::size_t> counts;
  double average = 0.0;

  std::vector<std::string> unevaluated() const {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (!rates[i]) out.push_back(labels[i]);
    }
    return out;
  }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["average_confidence_rate"] = average;
    j["classes"] = nlohmann::json::array();
    for (std::size_t i = 0; i < labels.size(); ++i) {
      nlohmann::json c{{"label", labels[i]}, {"samples", counts[i]}};
      c["confidence_rate"] = rates[i] ? nlohmann::json(*rates[i]) : nlohmann::json(nullptr);
      j["classes"].push_back(std::move(c));
    }
    j["unevaluated"] = unevaluated();
    return j;
  }
};

/// Builds a report from per-class rates; the average skips classes without samples.
inline EvalReport aggregate_confidence(std::vector<std::string> labels, std::vector<std::optional<double>> rates,
                                       std::vector<std::size_t> counts) {
  if (labels.size() != rates.size() || labels.size() != counts.size()) {
    fail(ErrorKind::InvalidInput, "labels, rates and counts differ in length");
  }
  EvalReport r{std::move(labels), std::move(rates), std::move(counts), 0.0};
  double sum = 0.0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < r.labels.size(); ++i) {
    if (r.counts[i] == 0) r.rates[i].reset();
    if (!r.rates[i]) continue;
    sum += *r.rates[i];
    ++n;
  }
  if (n == 0) fail(ErrorKind::InvalidInput, "no class has any evaluation sample");
  r.average = sum / static_cast<double>(n);
  return r;
}

inline EvalReport evaluate_confidence(const Detector& detect, const std::vector<EvalSample>& samples,
                                      const LabelMap& labels) {
  if (samples.empty()) fail(ErrorKind::InvalidInput, "validation set is empty");
  const std::size_t k = labels.size();
  std::vector<double> sums(k, 0.0);
  std::vector<std::size_t> counts(k, 0);
  for (const auto& s : samples) {
    std::set<int> present;
    for (const auto& o : s.truth.objects) present.insert(labels.require_id(o.name));
    if (present.empty()) continue;
    const auto dets = detect(s.image);
    for (int id : present) {
      double best = 0.0;
      for (const auto& d : dets) {
        if (d.class_id == id) best = std::max(best, d.score);
      }
      sums[static_cast<std::size_t>(id - 1)] += best;
      ++counts[static_cast<std::size_t>(id - 1)];
    }
  }
  std::vector<std::optional<double>> rates(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (counts[i] > 0) rates[i] = 100.0 * sums[i] / static_cast<double>(counts[i]);
  }
  return aggregate_confidence(labels.names(), std::move(rates), std::move(counts));
}

/// Fraction of samples whose highest-scoring detection matches some ground
/// truth object of the same class with IoU >= min_iou.
inline double top_detection_accuracy(const Detector& detect, const std::vector<EvalSample>& samples,
                                     const LabelMap& labels, double min_iou = 0.5) {
  if (samples.empty()) fail(ErrorKind::InvalidInput, "no samples to score");
  std::size_t hits = 0;
  for (const auto& s : samples) {
    const auto dets = detect(s.image);
    if (dets.empty()) continue;
    const Detection& top = dets.front();
    for (const auto& o : s.truth.objects) {
      if (labels.require_id(o.name) != top.class_id) continue;
      if (iou(top.box, normalize_box(o.box, s.truth.width, s.truth.height)) >= min_iou) {
        ++hits;
        break;
      }
    }
  }
  return static_cast<double>(hits) / static_cast<double>(samples.size());
}

/// Rows of nine labels over their rates, as in a printed results table.
inline std::string render_confidence_table(const EvalReport& r, std::size_t per_row = 9) {
  std::string out;
  char buf[32];
  for (std::size_t start = 0; start < r.labels.size(); start += per_row) {
    const std::size_t end = std::min(r.labels.size(), start + per_row);
    std::string names, values;
    for (std::size_t i = start; i < end; ++i) {
      std::snprintf(buf, sizeof buf, "%-6s", r.labels[i].c_str());
      names += buf;
      if (r.rates[i]) {
        std::snprintf(buf, sizeof buf, "%.0f%%", *r.rates[i]);
      } else {
        std::snprintf(buf, sizeof buf, "--");
      }
      std::string cell = buf;
      cell.resize(std::max<std::size_t>(cell.size(), 6), ' ');
      values += cell;
    }
    while (!names.empty() && names.back() == ' ') names.pop_back();
    while (!values.empty() && values.back() == ' ') values.pop_back();
    out += names + "\n" + values + "\n";
  }
  std::snprintf(buf, sizeof buf, "%.2f%%", r.average);
  out += "average " + std::string(buf) + "\n";
  return out;
}

}  // namespace signdet
