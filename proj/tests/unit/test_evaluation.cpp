#include <gtest/gtest.h>

#include "reference_rates.hpp"
#include "signdet/evaluation.hpp"
#include "signdet/label_map.hpp"

using namespace signdet;

namespace {

EvalSample sample(const std::string& label, PixelBox box) {
  EvalSample s;
  s.image = Image(20, 20);
  s.truth.width = 20;
  s.truth.height = 20;
  s.truth.objects.push_back({label, box});
  return s;
}

// Answers with the truth itself at full confidence. The image is matched
// by its first pixel, which each test sample sets to its index.
Detector oracle_detector(const std::vector<EvalSample>& samples, const LabelMap& labels) {
  return [&samples, &labels](const Image& img) {
    const auto& s = samples[img.pixel(0, 0)[0]];
    std::vector<Detection> out;
    for (const auto& o : s.truth.objects) {
      out.push_back({normalize_box(o.box, s.truth.width, s.truth.height), labels.require_id(o.name), 1.0});
    }
    return out;
  };
}

}  // namespace

TEST(Aggregate, ReferenceTableAverages) {
  const LabelMap labels = LabelMap::alphabet();
  std::vector<std::optional<double>> rates(kReferenceRates.begin(), kReferenceRates.end());
  const auto r = aggregate_confidence(labels.names(), rates, std::vector<std::size_t>(26, 5));
  EXPECT_NEAR(r.average, 85.46, 0.02);
  EXPECT_NEAR(r.average, 2222.0 / 26.0, 1e-12);
  EXPECT_TRUE(r.unevaluated().empty());
}

TEST(Aggregate, ClassesWithoutSamplesAreSkipped) {
  const auto r = aggregate_confidence({"A", "B", "C"}, {90.0, std::nullopt, 50.0}, {4, 0, 2});
  EXPECT_DOUBLE_EQ(r.average, 70.0);
  EXPECT_EQ(r.unevaluated(), std::vector<std::string>{"B"});
  EXPECT_TRUE(r.to_json()["classes"][1]["confidence_rate"].is_null());
  EXPECT_THROW(aggregate_confidence({"A"}, {std::nullopt}, {0}), Error);
  EXPECT_THROW(aggregate_confidence({"A", "B"}, {1.0}, {1, 1}), Error);
}

TEST(Evaluate, PerfectDetectorScoresOneHundred) {
  const LabelMap labels = LabelMap::from_names({"A", "B", "C"});
  std::vector<EvalSample> samples{sample("A", {1, 1, 10, 10}), sample("B", {5, 5, 15, 19}),
                                  sample("C", {0, 0, 20, 20}), sample("A", {3, 4, 9, 9})};
  for (std::size_t i = 0; i < samples.size(); ++i) samples[i].image.pixel(0, 0)[0] = static_cast<std::uint8_t>(i);
  const Detector d = oracle_detector(samples, labels);
  const EvalReport r = evaluate_confidence(d, samples, labels);
  EXPECT_DOUBLE_EQ(r.average, 100.0);
  EXPECT_EQ(r.counts, (std::vector<std::size_t>{2, 1, 1}));
  EXPECT_DOUBLE_EQ(top_detection_accuracy(d, samples, labels), 1.0);
}

TEST(Evaluate, MissedClassCountsAsZero) {
  const LabelMap labels = LabelMap::from_names({"A", "B"});
  const std::vector<EvalSample> samples{sample("A", {1, 1, 10, 10}), sample("A", {1, 1, 10, 10})};
  int calls = 0;
  const Detector d = [&](const Image&) {
    return ++calls == 1 ? std::vector<Detection>{{{0.05, 0.05, 0.5, 0.5}, 1, 0.8}, {{0, 0, 1, 1}, 1, 0.6}}
                        : std::vector<Detection>{{{0.05, 0.05, 0.5, 0.5}, 2, 0.9}};
  };
  const EvalReport r = evaluate_confidence(d, samples, labels);
  ASSERT_TRUE(r.rates[0].has_value());
  EXPECT_NEAR(*r.rates[0], 40.0, 1e-12);
  EXPECT_FALSE(r.rates[1].has_value());
  EXPECT_NEAR(r.average, 40.0, 1e-12);
}

TEST(Evaluate, TopDetectionNeedsClassAndOverlap) {
  const LabelMap labels = LabelMap::from_names({"A", "B"});
  const std::vector<EvalSample> samples{sample("A", {0, 0, 10, 10})};
  auto acc = [&](Detection top) {
    return top_detection_accuracy([&](const Image&) { return std::vector<Detection>{top}; }, samples, labels);
  };
  EXPECT_EQ(acc({{0, 0, 0.5, 0.5}, 1, 0.9}), 1.0);
  EXPECT_EQ(acc({{0, 0, 0.5, 0.5}, 2, 0.9}), 0.0);
  EXPECT_EQ(acc({{0.3, 0.3, 0.8, 0.8}, 1, 0.9}), 0.0);
  EXPECT_THROW(top_detection_accuracy([](const Image&) { return std::vector<Detection>{}; }, {}, labels), Error);
}

TEST(Render, ReferenceLayout) {
  const LabelMap labels = LabelMap::alphabet();
  std::vector<std::optional<double>> rates(kReferenceRates.begin(), kReferenceRates.end());
  const auto r = aggregate_confidence(labels.names(), rates, std::vector<std::size_t>(26, 5));
  const std::string table = render_confidence_table(r);
  EXPECT_EQ(table.substr(0, table.find('\n')), "A     B     C     D     E     F     G     H     I");
  EXPECT_NE(table.find("94%   98%   90%"), std::string::npos);
  EXPECT_NE(table.find("\nS     T"), std::string::npos);
  EXPECT_NE(table.find("average 85.46%\n"), std::string::npos);
}
