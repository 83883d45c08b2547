#pragma once

// Pipeline configuration: one JSON document holding every knob, with
// dotted-path overrides (train.steps=2000) applied on top.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "signdet/anchors.hpp"
#include "signdet/capture.hpp"
#include "signdet/error.hpp"
#include "signdet/fs_util.hpp"
#include "signdet/postprocess.hpp"
#include "signdet/tinynet.hpp"
#include "signdet/trainer.hpp"

namespace signdet {

inline constexpr int kConfigVersion = 1;

struct PathsConfig {
  std::string dataset_root = "data/images";
  std::string records_dir = "data/records";
  std::string label_map = "data/label_map.pbtxt";
  std::string checkpoint_dir = "data/checkpoints";
  std::string split_file = "data/split.json";
};

struct SplitConfig {
  double ratio = 0.8;
  std::uint64_t seed = 7;
};

struct SyntheticConfig {
  int classes = 3;
  int images_per_class = 25;
  int width = 96;
  int height = 96;
  std::uint64_t seed = 11;
};

struct ServeConfig {
  std::string host = "127.0.0.1";
  int port = 8765;
};

struct PipelineConfig {
  int version = kConfigVersion;
  PathsConfig paths;
  SplitConfig split;
  ModelConfig model;
  TrainConfig train;
  PostprocessConfig inference;
  CaptureConfig capture;
  SyntheticConfig synthetic;
  ServeConfig serve;
};

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PathsConfig, dataset_root, records_dir, label_map, checkpoint_dir,
                                                split_file)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SplitConfig, ratio, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(SyntheticConfig, classes, images_per_class, width, height, seed)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ServeConfig, host, port)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AnchorLayer, grid_w, grid_h, scales, aspect_ratios)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(AnchorSpec, layers, add_interpolated_scale, clip_to_image)
NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(ModelConfig, input_width, input_height, input_channels, channels,
                                                anchors, num_classes, weight_decay, seed, background_bias,
                                                head_kernel, input_offset)

inline void to_json(nlohmann::json& j, const TrainConfig& c) {
  j = {{"steps", c.steps},
       {"batch_size", c.batch_size},
       {"base_lr", c.base_lr},
       {"warmup_start_lr", c.warmup_start_lr ? nlohmann::json(*c.warmup_start_lr) : nlohmann::json(nullptr)},
       {"warmup_steps", c.warmup_steps},
       {"horizon", c.horizon},
       {"momentum", c.momentum},
       {"clip_grad_norm", c.clip_grad_norm},
       {"checkpoint_interval", c.checkpoint_interval},
       {"log_interval", c.log_interval},
       {"seed", c.seed},
       {"iou_threshold", c.iou_threshold},
       {"neg_pos_ratio", c.neg_pos_ratio},
       {"flip_probability", c.flip_probability}};
}

inline void from_json(const nlohmann::json& j, TrainConfig& c) {
  const TrainConfig d;
  c.steps = j.value("steps", d.steps);
  c.batch_size = j.value("batch_size", d.batch_size);
  c.base_lr = j.value("base_lr", d.base_lr);
  if (auto it = j.find("warmup_start_lr"); it != j.end() && !it->is_null()) {
    c.warmup_start_lr = it->get<double>();
  } else {
    c.warmup_start_lr.reset();
  }
  c.warmup_steps = j.value("warmup_steps", d.warmup_steps);
  c.horizon = j.value("horizon", d.horizon);
  c.momentum = j.value("momentum", d.momentum);
  c.clip_grad_norm = j.value("clip_grad_norm", d.clip_grad_norm);
  c.checkpoint_interval = j.value("checkpoint_interval", d.checkpoint_interval);
  c.log_interval = j.value("log_interval", d.log_interval);
  c.seed = j.value("seed", d.seed);
  c.iou_threshold = j.value("iou_threshold", d.iou_threshold);
  c.neg_pos_ratio = j.value("neg_pos_ratio", d.neg_pos_ratio);
  c.flip_probability = j.value("flip_probability", d.flip_probability);
}

inline void to_json(nlohmann::json& j, const PostprocessConfig& c) {
  j = {{"score_threshold", c.score_threshold}, {"nms_iou", c.nms_iou}, {"max_detections", c.max_detections},
       {"offset_scale", c.offset_scale.divisor}};
}

inline void from_json(const nlohmann::json& j, PostprocessConfig& c) {
  const PostprocessConfig d;
  c.score_threshold = j.value("score_threshold", d.score_threshold);
  c.nms_iou = j.value("nms_iou", d.nms_iou);
  c.max_detections = j.value("max_detections", d.max_detections);
  c.offset_scale.divisor = j.value("offset_scale", d.offset_scale.divisor);
}

inline void to_json(nlohmann::json& j, const CaptureConfig& c) {
  j = {{"labels", c.labels},
       {"images_per_label", c.images_per_label},
       {"capture_interval", c.capture_interval},
       {"inter_label_pause", c.inter_label_pause},
       {"output_root", c.output_root.generic_string()}};
}

inline void from_json(const nlohmann::json& j, CaptureConfig& c) {
  const CaptureConfig d;
  c.labels = j.value("labels", d.labels);
  c.images_per_label = j.value("images_per_label", d.images_per_label);
  c.capture_interval = j.value("capture_interval", d.capture_interval);
  c.inter_label_pause = j.value("inter_label_pause", d.inter_label_pause);
  c.output_root = j.value("output_root", d.output_root.generic_string());
}

NLOHMANN_DEFINE_TYPE_NON_INTRUSIVE_WITH_DEFAULT(PipelineConfig, version, paths, split, model, train, inference,
                                                capture, synthetic, serve)

namespace detail {

/// Every object key in `given` must also exist in `known`; arrays are opaque.
inline void check_known_keys(const nlohmann::json& known, const nlohmann::json& given, const std::string& path) {
  if (!given.is_object() || !known.is_object()) return;
  for (const auto& [key, value] : given.items()) {
    const std::string here = path.empty() ? key : path + "." + key;
    auto it = known.find(key);
    if (it == known.end()) fail(ErrorKind::ValidationError, "unknown config key " + here);
    check_known_keys(*it, value, here);
  }
}

inline nlohmann::json::json_pointer dotted_pointer(const std::string& key) {
  std::string ptr;
  std::size_t start = 0;
  while (true) {
    const auto dot = key.find('.', start);
    ptr += "/" + key.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  return nlohmann::json::json_pointer(ptr);
}

}  // namespace detail

inline nlohmann::json config_to_json(const PipelineConfig& c) { return c; }

/// Applies "a.b.c=value" overrides; values parse as JSON, falling back to a
/// plain string.
inline void apply_overrides(nlohmann::json& j, const std::vector<std::string>& overrides) {
  for (const auto& o : overrides) {
    const auto eq = o.find('=');
    if (eq == std::string::npos || eq == 0) fail(ErrorKind::ValidationError, "override must look like key=value: " + o);
    const std::string key = o.substr(0, eq);
    const std::string raw = o.substr(eq + 1);
    const auto ptr = detail::dotted_pointer(key);
    if (!j.contains(ptr)) fail(ErrorKind::ValidationError, "unknown config key " + key);
    nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
    if (value.is_discarded()) value = raw;
    j[ptr] = value;
  }
}

inline PipelineConfig config_from_json(const nlohmann::json& given, const std::vector<std::string>& overrides = {}) {
  nlohmann::json merged = config_to_json(PipelineConfig{});
  detail::check_known_keys(merged, given, "");
  merged.merge_patch(given);
  apply_overrides(merged, overrides);
  if (merged.value("version", 0) != kConfigVersion) {
    fail(ErrorKind::ValidationError, "unsupported config version " + merged["version"].dump());
  }
  PipelineConfig c;
  try {
    c = merged.get<PipelineConfig>();
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::ValidationError, std::string("config has a wrongly typed value: ") + e.what());
  }
  try {
    c.model.validate();
    c.train.validate();
    c.capture.validate();
  } catch (const Error& e) {
    fail(ErrorKind::ValidationError, e.detail());
  }
  if (!(c.split.ratio > 0.0 && c.split.ratio < 1.0)) fail(ErrorKind::ValidationError, "split.ratio must lie in (0,1)");
  if (!(c.inference.score_threshold >= 0.0 && c.inference.score_threshold <= 1.0)) {
    fail(ErrorKind::ValidationError, "inference.score_threshold must lie in [0,1]");
  }
  if (!(c.inference.nms_iou > 0.0 && c.inference.nms_iou <= 1.0)) {
    fail(ErrorKind::ValidationError, "inference.nms_iou must lie in (0,1]");
  }
  return c;
}

inline PipelineConfig load_config(const std::optional<fs::path>& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json given = nlohmann::json::object();
  if (path) {
    given = nlohmann::json::parse(read_file_text(*path), nullptr, false);
    if (given.is_discarded() || !given.is_object()) {
      fail(ErrorKind::ParseError, "config " + path->string() + " is not a JSON object");
    }
  }
  return config_from_json(given, overrides);
}

inline std::string dump_config(const PipelineConfig& c) { return config_to_json(c).dump(2) + "\n"; }

}  // namespace signdet
