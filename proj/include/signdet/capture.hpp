#pragma once

// Timed capture sessions: for each label, pause, then grab a fixed number
// of frames at a fixed interval and store them as
// <root>/<label>/<label>.<uuid>.<ext>, plus a JSON manifest.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <fstream>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <boost/uuid/random_generator.hpp>
#include <boost/uuid/string_generator.hpp>
#include <boost/uuid/uuid.hpp>
#include <boost/uuid/uuid_io.hpp>
#include <json.hpp>

#include "signdet/annotation.hpp"
#include "signdet/error.hpp"
#include "signdet/fs_util.hpp"
#include "signdet/image.hpp"
#include "signdet/label_map.hpp"
#include "signdet/random.hpp"
#include "signdet/synthetic.hpp"
#include "signdet/voc_xml.hpp"

namespace signdet {

struct Frame {
  Image image;
  double timestamp = 0.0;
  std::string source;                 // file name for replayed frames
  std::optional<Annotation> truth;    // known for synthetic and annotated frames
};

class FrameSource {
 public:
  virtual ~FrameSource() = default;
  /// Throws SourceExhausted when no frame is left.
  virtual Frame next_frame() = 0;
};

class Clock {
 public:
  virtual ~Clock() = default;
  virtual double now() = 0;
  virtual void sleep_for(double seconds) = 0;
};

class SystemClock final : public Clock {
 public:
  double now() override {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }
  void sleep_for(double seconds) override {
    if (seconds > 0) std::this_thread::sleep_for(std::chrono::duration<double>(seconds));
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

/// Time only moves when someone sleeps.
class SimulatedClock final : public Clock {
 public:
  double now() override { return t_; }
  void sleep_for(double seconds) override {
    if (seconds > 0) t_ += seconds;
  }

 private:
  double t_ = 0.0;
};

/// Endless (or bounded) stream of synthetic scenes.
class SyntheticSource final : public FrameSource {
 public:
  SyntheticSource(std::uint64_t seed, int class_count, SyntheticOptions opt = {},
                  std::optional<std::size_t> limit = std::nullopt)
      : rng_(seed), class_count_(class_count), opt_(std::move(opt)), limit_(limit) {}

  Frame next_frame() override {
    if (limit_ && produced_ >= *limit_) fail(ErrorKind::SourceExhausted, "synthetic source exhausted");
    auto scene = gen_synthetic_scene(rng_, class_count_, opt_);
    Frame f;
    f.image = std::move(scene.image);
    f.timestamp = static_cast<double>(produced_);
    f.source = "synthetic-" + std::to_string(produced_);
    f.truth = std::move(scene.annotation);
    ++produced_;
    return f;
  }

 private:
  Rng rng_;
  int class_count_;
  SyntheticOptions opt_;
  std::optional<std::size_t> limit_;
  std::size_t produced_ = 0;
};

/// Replays the PPM files under a directory in lexicographic path order.
/// A sibling .xml annotation, when present, is attached as the frame's truth.
class DirectorySource final : public FrameSource {
 public:
  explicit DirectorySource(const fs::path& dir) {
    std::error_code ec;
    if (!fs::is_directory(dir, ec)) fail(ErrorKind::IoError, "not a directory: " + dir.string());
    for (const auto& e : fs::recursive_directory_iterator(dir)) {
      if (e.is_regular_file() && image_format_of(e.path().filename().string()) == "ppm") files_.push_back(e.path());
    }
    std::sort(files_.begin(), files_.end());
  }

  std::size_t size() const noexcept { return files_.size(); }

  Frame next_frame() override {
    if (next_ >= files_.size()) fail(ErrorKind::SourceExhausted, "no more frames to replay");
    const fs::path& p = files_[next_];
    Frame f;
    f.image = decode_ppm(read_file_bytes(p));
    f.timestamp = static_cast<double>(next_);
    f.source = p.filename().string();
    const fs::path xml = fs::path(p).replace_extension(".xml");
    if (fs::exists(xml)) f.truth = parse_voc_xml(read_file_text(xml));
    ++next_;
    return f;
  }

 private:
  std::vector<fs::path> files_;
  std::size_t next_ = 0;
};

struct CaptureConfig {
  std::vector<std::string> labels = LabelMap::alphabet().names();
  int images_per_label = 25;
  double capture_interval = 2.0;   // seconds between frames of one label
  double inter_label_pause = 5.0;  // seconds before each label's first frame
  fs::path output_root = "dataset";

  void validate() const {
    if (images_per_label < 1) fail(ErrorKind::InvalidInput, "images_per_label must be at least 1");
    if (capture_interval < 0 || inter_label_pause < 0) fail(ErrorKind::InvalidInput, "intervals must be non-negative");
    for (const auto& l : labels) {
      if (l.empty() || l.find_first_of("/\\.") != std::string::npos) {
        fail(ErrorKind::InvalidInput, "label \"" + l + "\" cannot name a folder");
      }
    }
  }
};

struct CaptureEvent {
  enum class Kind { LabelStarted, FrameSaved, Finished, Aborted } kind = Kind::LabelStarted;
  std::string label;
  int index = 0;  // frame index within the label
  std::string path;
  double time = 0.0;
};

using CaptureSink = std::function<void(const CaptureEvent&)>;

struct ManifestEntry {
  std::string label;
  std::string path;  // relative to the output root
  double timestamp = 0.0;
};

struct CaptureManifest {
  std::vector<ManifestEntry> images;
  std::string format = "ppm";
  double started = 0.0;
  double finished = 0.0;
  bool complete = true;

  double elapsed() const { return finished - started; }

  nlohmann::json to_json() const {
    nlohmann::json j;
    j["version"] = 1;
    j["format"] = format;
    j["complete"] = complete;
    j["elapsed_seconds"] = elapsed();
    j["images"] = nlohmann::json::array();
    for (const auto& e : images) j["images"].push_back({{"label", e.label}, {"path", e.path}, {"timestamp", e.timestamp}});
    return j;
  }
};

inline std::string new_uuid4() {
  thread_local boost::uuids::random_generator gen;
  return boost::uuids::to_string(gen());
}

/// Version-4 uuid drawn from a seeded generator, for reproducible fixtures.
inline std::string uuid4_from(Rng& rng) {
  boost::uuids::uuid u{};
  for (std::size_t i = 0; i < 16; i += 8) {
    const std::uint64_t r = rng.next();
    for (std::size_t k = 0; k < 8; ++k) u.data[i + k] = static_cast<std::uint8_t>(r >> (8 * k));
  }
  u.data[6] = static_cast<std::uint8_t>((u.data[6] & 0x0F) | 0x40);
  u.data[8] = static_cast<std::uint8_t>((u.data[8] & 0x3F) | 0x80);
  return boost::uuids::to_string(u);
}

struct CaptureFileName {
  std::string label;
  std::string uuid;
  int uuid_version = 0;
  std::string ext;
};

/// Parses "<label>.<uuid>.<ext>". Random (v4) and time-based (v1) uuids are
/// both accepted so older captures can be ingested.
inline std::optional<CaptureFileName> parse_capture_filename(const std::string& name) {
  const auto last = name.rfind('.');
  if (last == std::string::npos) return std::nullopt;
  const auto mid = name.rfind('.', last - 1);
  if (mid == std::string::npos || mid == 0) return std::nullopt;
  CaptureFileName out{name.substr(0, mid), name.substr(mid + 1, last - mid - 1), 0, name.substr(last + 1)};
  if (out.uuid.size() != 36) return std::nullopt;
  try {
    const auto u = boost::uuids::string_generator{}(out.uuid);
    if (u.variant() != boost::uuids::uuid::variant_rfc_4122) return std::nullopt;
    out.uuid_version = static_cast<int>(u.version());
  } catch (const std::exception&) {
    return std::nullopt;
  }
  if (out.uuid_version != 1 && out.uuid_version != 4) return std::nullopt;
  return out;
}

namespace detail {

inline void require_writable(const fs::path& root) {
  std::error_code ec;
  fs::create_directories(root, ec);
  if (ec || !fs::is_directory(root)) fail(ErrorKind::IoError, "cannot create output root " + root.string());
  const fs::path probe = root / (".probe-" + new_uuid4());
  {
    std::ofstream out(probe);
    if (!out) fail(ErrorKind::IoError, "output root is not writable: " + root.string());
  }
  fs::remove(probe, ec);
}

}  // namespace detail

/// Runs one session. On SourceExhausted the partial manifest is written and
/// SessionAborted is raised.
inline CaptureManifest run_capture_session(FrameSource& source, const CaptureConfig& cfg, Clock& clock,
                                           const CaptureSink& sink = {}) {
  cfg.validate();
  CaptureManifest manifest;
  manifest.started = manifest.finished = clock.now();
  if (cfg.labels.empty()) return manifest;
  detail::require_writable(cfg.output_root);

  auto emit = [&](CaptureEvent ev) {
    if (sink) sink(ev);
  };
  auto write_manifest = [&] {
    write_file_atomic(cfg.output_root / "manifest.json", manifest.to_json().dump(2) + "\n");
  };

  std::optional<std::pair<int, int>> dims;
  for (const auto& label : cfg.labels) {
    emit({CaptureEvent::Kind::LabelStarted, label, 0, {}, clock.now()});
    clock.sleep_for(cfg.inter_label_pause);
    const fs::path folder = cfg.output_root / label;
    fs::create_directories(folder);
    for (int i = 0; i < cfg.images_per_label; ++i) {
      if (i > 0) clock.sleep_for(cfg.capture_interval);
      Frame frame;
      try {
        frame = source.next_frame();
      } catch (const Error& e) {
        if (e.kind() != ErrorKind::SourceExhausted) throw;
        manifest.complete = false;
        manifest.finished = clock.now();
        write_manifest();
        emit({CaptureEvent::Kind::Aborted, label, i, {}, clock.now()});
        fail(ErrorKind::SessionAborted, "frame source ran out during label " + label + " after " +
                                            std::to_string(manifest.images.size()) + " images");
      }
      const std::pair<int, int> d{frame.image.width, frame.image.height};
      if (dims && *dims != d) fail(ErrorKind::InvalidInput, "frame dimensions changed mid-session");
      dims = d;
      const double t = clock.now();
      const std::string name = label + "." + new_uuid4() + "." + manifest.format;
      write_file_atomic(folder / name, encode_ppm(frame.image));
      const std::string rel = (fs::path(label) / name).generic_string();
      manifest.images.push_back({label, rel, t});
      emit({CaptureEvent::Kind::FrameSaved, label, i, rel, t});
    }
  }
  manifest.finished = clock.now();
  write_manifest();
  emit({CaptureEvent::Kind::Finished, {}, 0, {}, manifest.finished});
  return manifest;
}

}  // namespace signdet
