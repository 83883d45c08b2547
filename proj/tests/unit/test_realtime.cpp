#include <thread>

#include <gtest/gtest.h>

#include "signdet/realtime.hpp"

using namespace signdet;

namespace {

SyntheticOptions frames() {
  SyntheticOptions o;
  o.width = 32;
  o.height = 32;
  return o;
}

Detector fixed_detector() {
  return [](const Image&) {
    return std::vector<Detection>{{{0.1, 0.1, 0.5, 0.5}, 2, 0.9}, {{0.5, 0.5, 0.9, 0.9}, 26, 0.6}};
  };
}

}  // namespace

TEST(Realtime, OneEmissionPerFrame) {
  SyntheticSource src(1, 3, frames(), 7);
  std::vector<FrameResult> out;
  const auto n = run_realtime(src, fixed_detector(), LabelMap::alphabet(), [&](FrameResult r) { out.push_back(r); });
  EXPECT_EQ(n, 7u);
  ASSERT_EQ(out.size(), 7u);
  for (std::size_t i = 0; i < out.size(); ++i) {
    EXPECT_EQ(out[i].frame_id, i);
    ASSERT_EQ(out[i].detections.size(), 2u);
    EXPECT_EQ(out[i].detections[0].label, "B");
    EXPECT_EQ(out[i].detections[1].label, "Z");
    EXPECT_GE(out[i].latency_ms, 0.0);
  }
  const auto j = out[0].to_json();
  EXPECT_EQ(j["detections"][0]["label"], "B");
  EXPECT_EQ(j["detections"][0]["box"].size(), 4u);
}

TEST(Realtime, MaxFramesStopsEarly) {
  SyntheticSource src(2, 3, frames());
  std::size_t seen = 0;
  EXPECT_EQ(run_realtime(src, fixed_detector(), LabelMap::alphabet(), [&](FrameResult) { ++seen; }, 5), 5u);
  EXPECT_EQ(seen, 5u);
}

TEST(Realtime, UnknownClassIdFails) {
  SyntheticSource src(3, 3, frames(), 2);
  const Detector bad = [](const Image&) { return std::vector<Detection>{{{0, 0, 1, 1}, 5, 0.9}}; };
  EXPECT_THROW(run_realtime(src, bad, LabelMap::from_names({"A", "B"}), [](FrameResult) {}), Error);
}

TEST(Realtime, ChannelSinkFeedsAConsumerThread) {
  BoundedChannel<FrameResult> ch(2);
  std::vector<std::uint64_t> ids;
  std::thread consumer([&] {
    while (auto r = ch.recv()) ids.push_back(r->frame_id);
  });
  SyntheticSource src(4, 3, frames(), 20);
  run_realtime(src, fixed_detector(), LabelMap::alphabet(), channel_sink(ch));
  ch.close();
  consumer.join();
  ASSERT_EQ(ids.size(), 20u);
  for (std::size_t i = 0; i < ids.size(); ++i) EXPECT_EQ(ids[i], i);
}

TEST(Channel, CloseWakesReceiverAndRejectsSend) {
  BoundedChannel<int> ch(1);
  EXPECT_TRUE(ch.send(1));
  ch.close();
  EXPECT_FALSE(ch.send(2));
  EXPECT_EQ(ch.recv(), 1);
  EXPECT_FALSE(ch.recv().has_value());
}
