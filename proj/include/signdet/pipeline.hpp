#pragma once

// The file-level steps shared by the command-line tool and the end-to-end
// tests: dataset generation, scanning, split files, record files, and
// loading records back as training or evaluation samples.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "signdet/capture.hpp"
#include "signdet/error.hpp"
#include "signdet/evaluation.hpp"
#include "signdet/example_codec.hpp"
#include "signdet/fs_util.hpp"
#include "signdet/image.hpp"
#include "signdet/label_map.hpp"
#include "signdet/random.hpp"
#include "signdet/record_io.hpp"
#include "signdet/split.hpp"
#include "signdet/synthetic.hpp"
#include "signdet/trainer.hpp"
#include "signdet/voc_xml.hpp"

namespace signdet {

inline fs::path annotation_path_for(const fs::path& image) { return fs::path(image).replace_extension(".xml"); }

/// Writes per_class scenes for each class into <root>/<label>/ as PPM plus
/// VOC XML. The folder follows the scene's first object. Returns the files written.
inline std::vector<fs::path> generate_synthetic_dataset(const fs::path& root, int classes, int per_class,
                                                        std::uint64_t seed, SyntheticOptions opt = {}) {
  if (classes < 1 || per_class < 1) fail(ErrorKind::InvalidInput, "need at least one class and one image per class");
  if (opt.class_names.empty()) {
    for (int k = 1; k <= classes; ++k) opt.class_names.push_back(synthetic_class_name(k));
  }
  std::vector<fs::path> written;
  Rng rng(seed);
  for (int k = 1; k <= classes; ++k) {
    const std::string label = opt.class_names[static_cast<std::size_t>(k - 1)];
    const fs::path folder = root / label;
    fs::create_directories(folder);
    for (int i = 0; i < per_class; ++i) {
      SyntheticOptions o = opt;
      o.first_class = k;
      auto scene = gen_synthetic_scene(rng, classes, o);
      const std::string name = label + "." + uuid4_from(rng) + ".ppm";
      scene.annotation.folder = label;
      scene.annotation.filename = name;
      scene.annotation.path = label + "/" + name;
      write_file_atomic(folder / name, encode_ppm(scene.image));
      write_file_atomic(annotation_path_for(folder / name), write_voc_xml(scene.annotation));
      written.push_back(folder / name);
    }
  }
  return written;
}

/// Image files grouped by their label folder, as root-relative paths.
inline ClassItems scan_dataset(const fs::path& root) {
  std::error_code ec;
  if (!fs::is_directory(root, ec)) fail(ErrorKind::IoError, "dataset root not found: " + root.string());
  ClassItems items;
  for (const auto& dir : fs::directory_iterator(root)) {
    if (!dir.is_directory()) continue;
    const std::string label = dir.path().filename().string();
    auto& list = items[label];
    for (const auto& f : fs::directory_iterator(dir.path())) {
      if (f.is_regular_file() && is_image_format(image_format_of(f.path().filename().string()))) {
        list.push_back((fs::path(label) / f.path().filename()).generic_string());
      }
    }
    std::sort(list.begin(), list.end());
  }
  return items;
}

inline nlohmann::json split_to_json(const DatasetSplit& s) {
  return {{"seed", s.seed}, {"ratio", s.ratio}, {"train", s.train}, {"validation", s.validation},
          {"warnings", s.warnings}};
}

inline DatasetSplit split_from_json(const nlohmann::json& j) {
  DatasetSplit s;
  try {
    s.seed = j.at("seed").get<std::uint64_t>();
    s.ratio = j.at("ratio").get<double>();
    s.train = j.at("train").get<ClassItems>();
    s.validation = j.at("validation").get<ClassItems>();
    s.warnings = j.value("warnings", std::vector<std::string>{});
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorKind::SchemaError, std::string("split file: ") + e.what());
  }
  return s;
}

inline void write_split(const DatasetSplit& s, const fs::path& path) {
  write_file_atomic(path, split_to_json(s).dump(2) + "\n");
}

inline DatasetSplit read_split(const fs::path& path) {
  const auto j = nlohmann::json::parse(read_file_text(path), nullptr, false);
  if (j.is_discarded()) fail(ErrorKind::ParseError, "split file is not JSON: " + path.string());
  return split_from_json(j);
}

/// Serializes every listed image with its sibling annotation.
inline std::vector<std::vector<std::uint8_t>> encode_items(const ClassItems& items, const fs::path& root,
                                                           const LabelMap& labels) {
  std::vector<std::vector<std::uint8_t>> payloads;
  for (const auto& [_, list] : items) {
    for (const auto& id : list) {
      const fs::path image = root / id;
      const fs::path xml = annotation_path_for(image);
      if (!fs::exists(xml)) fail(ErrorKind::ValidationError, "image " + id + " has no annotation");
      const Annotation a = parse_voc_xml(read_file_text(xml));
      payloads.push_back(encode_example(a, read_file_bytes(image), labels));
    }
  }
  return payloads;
}

struct RecordPaths {
  fs::path train;
  fs::path validation;
};

inline RecordPaths record_paths(const fs::path& records_dir) {
  return {records_dir / "train.record", records_dir / "validation.record"};
}

inline RecordPaths make_records(const DatasetSplit& split, const fs::path& root, const LabelMap& labels,
                                const fs::path& records_dir) {
  const auto paths = record_paths(records_dir);
  fs::create_directories(records_dir);
  write_records(encode_items(split.train, root, labels), paths.train);
  write_records(encode_items(split.validation, root, labels), paths.validation);
  return paths;
}

inline TrainingExample training_example_from(const ExampleRecord& rec, const LabelMap& labels,
                                             const ModelConfig& model) {
  const Image img = decode_image(rec.encoded, rec.format);
  TrainingExample ex;
  ex.image = to_model_input(img, model.input_width, model.input_height);
  for (const auto& o : rec.objects) {
    if (o.class_label < 1 || o.class_label > static_cast<std::int64_t>(labels.size())) {
      fail(ErrorKind::UnknownLabel, "record " + rec.filename + " uses label id " + std::to_string(o.class_label) +
                                        " which the label map lacks");
    }
    if (!o.class_text.empty() && labels.require_id(o.class_text) != o.class_label) {
      fail(ErrorKind::UnknownLabel, "record " + rec.filename + " maps \"" + o.class_text + "\" to id " +
                                        std::to_string(o.class_label) + ", the label map disagrees");
    }
    ex.gt.boxes.push_back(o.box());
    ex.gt.class_ids.push_back(static_cast<int>(o.class_label));
  }
  return ex;
}

inline std::vector<TrainingExample> load_training_examples(const fs::path& records, const LabelMap& labels,
                                                           const ModelConfig& model) {
  std::vector<TrainingExample> out;
  for (const auto& payload : read_records(records)) {
    out.push_back(training_example_from(parse_example(payload), labels, model));
  }
  return out;
}

inline std::vector<EvalSample> load_eval_samples(const fs::path& records, const LabelMap& labels) {
  std::vector<EvalSample> out;
  for (const auto& payload : read_records(records)) {
    auto [annotation, bytes] = decode_example(payload, labels);
    EvalSample s;
    s.image = decode_image(bytes, image_format_of(annotation.filename));
    s.truth = std::move(annotation);
    out.push_back(std::move(s));
  }
  return out;
}

}  // namespace signdet
