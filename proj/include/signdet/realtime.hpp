#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "signdet/capture.hpp"
#include "signdet/channel.hpp"
#include "signdet/evaluation.hpp"
#include "signdet/label_map.hpp"

namespace signdet {

struct LabeledDetection {
  Detection detection;
  std::string label;
};

struct FrameResult {
  std::uint64_t frame_id = 0;
  std::string source;
  std::vector<LabeledDetection> detections;
  double latency_ms = 0.0;

  nlohmann::json to_json() const {
    nlohmann::json j{{"frame", frame_id}, {"source", source}, {"latency_ms", latency_ms}};
    j["detections"] = nlohmann::json::array();
    for (const auto& d : detections) {
      const auto& b = d.detection.box;
      j["detections"].push_back({{"label", d.label},
                                 {"class_id", d.detection.class_id},
                                 {"score", d.detection.score},
                                 {"box", {b.xmin, b.ymin, b.xmax, b.ymax}}});
    }
    return j;
  }
};

using FrameSink = std::function<void(FrameResult)>;

/// Sink that hands results to a consumer thread; blocks while the channel is full.
inline FrameSink channel_sink(BoundedChannel<FrameResult>& ch) {
  return [&ch](FrameResult r) { ch.send(std::move(r)); };
}

/// Processes frames until the source is exhausted or max_frames is reached.
/// Returns the number of frames emitted.
inline std::size_t run_realtime(FrameSource& source, const Detector& detect, const LabelMap& labels,
                                const FrameSink& sink, std::size_t max_frames = 0) {
  std::size_t n = 0;
  while (max_frames == 0 || n < max_frames) {
    Frame frame;
    try {
      frame = source.next_frame();
    } catch (const Error& e) {
      if (e.kind() == ErrorKind::SourceExhausted) break;
      throw;
    }
    const auto t0 = std::chrono::steady_clock::now();
    FrameResult r;
    r.frame_id = n;
    r.source = frame.source;
    for (auto& d : detect(frame.image)) r.detections.push_back({d, labels.name_of(d.class_id)});
    r.latency_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
    sink(std::move(r));
    ++n;
  }
  return n;
}

}  // namespace signdet
