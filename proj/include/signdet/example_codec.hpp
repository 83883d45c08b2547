#pragma once

// Training examples as tf.train.Example messages:
//
//   Example  { Features features = 1; }
//   Features { map<string, Feature> feature = 1; }
//   Feature  { oneof { BytesList bytes_list = 1; FloatList float_list = 2;
//                      Int64List int64_list = 3; } }
//   *List    { repeated ... value = 1; }   // floats and ints packed
//
// Map entries are written in key order, so encoding is deterministic.
// Keys follow the usual object-detection layout (image/height,
// image/object/bbox/xmin, ...). Boxes are stored normalized.

#include <bit>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "signdet/annotation.hpp"
#include "signdet/error.hpp"
#include "signdet/image.hpp"
#include "signdet/label_map.hpp"
#include "signdet/wire.hpp"

namespace signdet {

struct ExampleObject {
  float xmin = 0.0f;
  float ymin = 0.0f;
  float xmax = 0.0f;
  float ymax = 0.0f;
  std::string class_text;
  std::int64_t class_label = 0;
  std::int64_t difficult = 0;
  std::int64_t truncated = 0;
  std::string view;

  BoxCorner box() const { return {xmin, ymin, xmax, ymax}; }

  friend bool operator==(const ExampleObject&, const ExampleObject&) = default;
};

/// Decoded view of one serialized example.
struct ExampleRecord {
  std::string filename;
  std::string source_id;
  std::string format;
  std::int64_t width = 0;
  std::int64_t height = 0;
  std::vector<std::uint8_t> encoded;
  std::vector<ExampleObject> objects;

  friend bool operator==(const ExampleRecord&, const ExampleRecord&) = default;
};

namespace detail {

using BytesList = std::vector<std::string>;
using FloatList = std::vector<float>;
using Int64List = std::vector<std::int64_t>;
using Feature = std::variant<BytesList, FloatList, Int64List>;

inline std::vector<std::uint8_t> serialize_feature(const Feature& feature) {
  std::vector<std::uint8_t> list;
  std::uint32_t kind = 0;
  if (const auto* b = std::get_if<BytesList>(&feature)) {
    kind = 1;
    for (const auto& s : *b) wire::put_bytes(list, 1, s);
  } else if (const auto* f = std::get_if<FloatList>(&feature)) {
    kind = 2;
    if (!f->empty()) {
      std::vector<std::uint8_t> packed;
      for (float v : *f) wire::put_fixed32(packed, std::bit_cast<std::uint32_t>(v));
      wire::put_bytes(list, 1, packed);
    }
  } else {
    kind = 3;
    const auto& ints = std::get<Int64List>(feature);
    if (!ints.empty()) {
      std::vector<std::uint8_t> packed;
      for (auto v : ints) wire::put_varint(packed, static_cast<std::uint64_t>(v));
      wire::put_bytes(list, 1, packed);
    }
  }
  std::vector<std::uint8_t> out;
  wire::put_bytes(out, kind, list);
  return out;
}

inline Feature parse_feature(const wire::Field& field) {
  wire::Reader r(field.payload, field.offset);
  Feature result = BytesList{};
  while (!r.done()) {
    const auto f = r.next();
    wire::expect_type(f, wire::WireType::LengthDelimited, "Feature");
    wire::Reader list(f.payload, f.offset);
    if (f.number == 1) {
      BytesList values;
      while (!list.done()) {
        const auto v = list.next();
        if (v.number != 1) continue;
        wire::expect_type(v, wire::WireType::LengthDelimited, "BytesList");
        values.emplace_back(reinterpret_cast<const char*>(v.payload.data()), v.payload.size());
      }
      result = std::move(values);
    } else if (f.number == 2) {
      FloatList values;
      while (!list.done()) {
        const auto v = list.next();
        if (v.number != 1) continue;
        if (v.type == wire::WireType::Fixed32) {
          values.push_back(std::bit_cast<float>(static_cast<std::uint32_t>(v.varint)));
        } else {
          wire::expect_type(v, wire::WireType::LengthDelimited, "FloatList");
          if (v.payload.size() % 4 != 0) {
            fail(ErrorKind::DecodeError, "packed float list length not a multiple of 4 at byte " + std::to_string(v.offset));
          }
          for (std::size_t i = 0; i < v.payload.size(); i += 4) {
            std::uint32_t bits = 0;
            for (int k = 0; k < 4; ++k) bits |= std::uint32_t{v.payload[i + k]} << (8 * k);
            values.push_back(std::bit_cast<float>(bits));
          }
        }
      }
      result = std::move(values);
    } else if (f.number == 3) {
      Int64List values;
      while (!list.done()) {
        const auto v = list.next();
        if (v.number != 1) continue;
        if (v.type == wire::WireType::Varint) {
          values.push_back(static_cast<std::int64_t>(v.varint));
        } else {
          wire::expect_type(v, wire::WireType::LengthDelimited, "Int64List");
          wire::Reader packed(v.payload, v.offset);
          while (!packed.done()) values.push_back(static_cast<std::int64_t>(packed.varint()));
        }
      }
      result = std::move(values);
    }
  }
  return result;
}

template <typename L>
const L* feature_as(const std::map<std::string, Feature>& features, const std::string& key) {
  auto it = features.find(key);
  if (it == features.end()) return nullptr;
  const L* v = std::get_if<L>(&it->second);
  if (!v) fail(ErrorKind::DecodeError, "feature " + key + " has an unexpected list type");
  return v;
}

}  // namespace detail

inline std::vector<std::uint8_t> serialize_example(const ExampleRecord& rec) {
  using namespace detail;
  std::map<std::string, Feature> features;
  features["image/height"] = Int64List{rec.height};
  features["image/width"] = Int64List{rec.width};
  features["image/filename"] = BytesList{rec.filename};
  features["image/source_id"] = BytesList{rec.source_id};
  features["image/format"] = BytesList{rec.format};
  features["image/encoded"] = BytesList{std::string(rec.encoded.begin(), rec.encoded.end())};
  FloatList xmin, xmax, ymin, ymax;
  BytesList text, view;
  Int64List label, difficult, truncated;
  for (const auto& o : rec.objects) {
    xmin.push_back(o.xmin);
    xmax.push_back(o.xmax);
    ymin.push_back(o.ymin);
    ymax.push_back(o.ymax);
    text.push_back(o.class_text);
    label.push_back(o.class_label);
    difficult.push_back(o.difficult);
    truncated.push_back(o.truncated);
    view.push_back(o.view);
  }
  features["image/object/bbox/xmin"] = xmin;
  features["image/object/bbox/xmax"] = xmax;
  features["image/object/bbox/ymin"] = ymin;
  features["image/object/bbox/ymax"] = ymax;
  features["image/object/class/text"] = text;
  features["image/object/class/label"] = label;
  features["image/object/difficult"] = difficult;
  features["image/object/truncated"] = truncated;
  features["image/object/view"] = view;

  std::vector<std::uint8_t> feature_map;
  for (const auto& [key, value] : features) {
    std::vector<std::uint8_t> entry;
    wire::put_bytes(entry, 1, key);
    wire::put_bytes(entry, 2, serialize_feature(value));
    wire::put_bytes(feature_map, 1, entry);
  }
  std::vector<std::uint8_t> out;
  wire::put_bytes(out, 1, feature_map);
  return out;
}

inline ExampleRecord parse_example(std::span<const std::uint8_t> bytes) {
  using namespace detail;
  std::map<std::string, Feature> features;
  wire::Reader top(bytes);
  while (!top.done()) {
    const auto f = top.next();
    if (f.number != 1) continue;
    wire::expect_type(f, wire::WireType::LengthDelimited, "Example.features");
    wire::Reader fm(f.payload, f.offset);
    while (!fm.done()) {
      const auto entry = fm.next();
      if (entry.number != 1) continue;
      wire::expect_type(entry, wire::WireType::LengthDelimited, "Features.feature");
      wire::Reader er(entry.payload, entry.offset);
      std::string key;
      Feature value = BytesList{};
      while (!er.done()) {
        const auto kv = er.next();
        wire::expect_type(kv, wire::WireType::LengthDelimited, "map entry");
        if (kv.number == 1) key.assign(reinterpret_cast<const char*>(kv.payload.data()), kv.payload.size());
        if (kv.number == 2) value = parse_feature(kv);
      }
      features[key] = std::move(value);
    }
  }

  ExampleRecord rec;
  auto single_int = [&](const std::string& key) -> std::int64_t {
    const auto* v = feature_as<Int64List>(features, key);
    if (!v || v->size() != 1) fail(ErrorKind::DecodeError, "example lacks a single " + key);
    return v->front();
  };
  auto single_bytes = [&](const std::string& key, bool required) -> std::string {
    const auto* v = feature_as<BytesList>(features, key);
    if (!v || v->empty()) {
      if (required) fail(ErrorKind::DecodeError, "example lacks " + key);
      return {};
    }
    return v->front();
  };
  rec.height = single_int("image/height");
  rec.width = single_int("image/width");
  rec.filename = single_bytes("image/filename", false);
  rec.source_id = single_bytes("image/source_id", false);
  rec.format = single_bytes("image/format", false);
  const std::string encoded = single_bytes("image/encoded", true);
  rec.encoded.assign(encoded.begin(), encoded.end());

  const FloatList empty_f;
  const BytesList empty_b;
  const Int64List empty_i;
  auto floats = [&](const std::string& k) { auto* v = feature_as<FloatList>(features, k); return v ? *v : empty_f; };
  auto strings = [&](const std::string& k) { auto* v = feature_as<BytesList>(features, k); return v ? *v : empty_b; };
  auto ints = [&](const std::string& k) { auto* v = feature_as<Int64List>(features, k); return v ? *v : empty_i; };
  const auto xmin = floats("image/object/bbox/xmin"), xmax = floats("image/object/bbox/xmax");
  const auto ymin = floats("image/object/bbox/ymin"), ymax = floats("image/object/bbox/ymax");
  const auto text = strings("image/object/class/text");
  const auto label = ints("image/object/class/label");
  const auto difficult = ints("image/object/difficult");
  const auto truncated = ints("image/object/truncated");
  const auto view = strings("image/object/view");
  const std::size_t n = xmin.size();
  if (xmax.size() != n || ymin.size() != n || ymax.size() != n || label.size() != n ||
      (!text.empty() && text.size() != n) || (!difficult.empty() && difficult.size() != n) ||
      (!truncated.empty() && truncated.size() != n) || (!view.empty() && view.size() != n)) {
    fail(ErrorKind::DecodeError, "per-object feature lists differ in length");
  }
  for (std::size_t i = 0; i < n; ++i) {
    ExampleObject o{xmin[i], ymin[i], xmax[i], ymax[i],
                    text.empty() ? std::string{} : text[i],
                    label[i],
                    difficult.empty() ? 0 : difficult[i],
                    truncated.empty() ? 0 : truncated[i],
                    view.empty() ? std::string{} : view[i]};
    const bool in_unit = o.xmin >= 0.0f && o.ymin >= 0.0f && o.xmax <= 1.0f && o.ymax <= 1.0f &&
                         o.xmin <= o.xmax && o.ymin <= o.ymax;
    if (!in_unit) fail(ErrorKind::DecodeError, "object " + std::to_string(i) + " box is not normalized");
    rec.objects.push_back(std::move(o));
  }
  return rec;
}

/// Builds the record for an annotated image; labels resolve through `labels`.
inline ExampleRecord make_example(const Annotation& a, std::span<const std::uint8_t> image_bytes,
                                  const LabelMap& labels) {
  validate_annotation(a);
  if (image_bytes.empty()) fail(ErrorKind::InvalidInput, "image bytes are empty for " + a.filename);
  ExampleRecord rec;
  rec.filename = a.filename;
  rec.source_id = a.filename;
  rec.format = image_format_of(a.filename);
  rec.width = a.width;
  rec.height = a.height;
  rec.encoded.assign(image_bytes.begin(), image_bytes.end());
  for (const auto& o : a.objects) {
    ExampleObject e;
    e.xmin = static_cast<float>(static_cast<double>(o.box.xmin) / a.width);
    e.xmax = static_cast<float>(static_cast<double>(o.box.xmax) / a.width);
    e.ymin = static_cast<float>(static_cast<double>(o.box.ymin) / a.height);
    e.ymax = static_cast<float>(static_cast<double>(o.box.ymax) / a.height);
    e.class_text = o.name;
    e.class_label = labels.require_id(o.name);
    e.difficult = o.difficult ? 1 : 0;
    e.truncated = o.truncated ? 1 : 0;
    e.view = o.pose;
    rec.objects.push_back(std::move(e));
  }
  return rec;
}

inline std::vector<std::uint8_t> encode_example(const Annotation& a, std::span<const std::uint8_t> image_bytes,
                                                const LabelMap& labels) {
  return serialize_example(make_example(a, image_bytes, labels));
}

/// Annotation view of a record; labels must agree with `labels`.
inline Annotation annotation_of(const ExampleRecord& rec, const LabelMap& labels) {
  Annotation a;
  a.filename = rec.filename;
  a.width = static_cast<int>(rec.width);
  a.height = static_cast<int>(rec.height);
  for (const auto& o : rec.objects) {
    const std::string name = o.class_text.empty() ? labels.name_of(static_cast<int>(o.class_label)) : o.class_text;
    if (labels.require_id(name) != o.class_label) {
      fail(ErrorKind::UnknownLabel, "label \"" + name + "\" has id " + std::to_string(labels.require_id(name)) +
                                        " in the label map but " + std::to_string(o.class_label) + " in the record");
    }
    AnnotatedObject obj;
    obj.name = name;
    obj.box = {static_cast<int>(std::lround(o.xmin * static_cast<double>(rec.width))),
               static_cast<int>(std::lround(o.ymin * static_cast<double>(rec.height))),
               static_cast<int>(std::lround(o.xmax * static_cast<double>(rec.width))),
               static_cast<int>(std::lround(o.ymax * static_cast<double>(rec.height)))};
    obj.pose = o.view;
    obj.truncated = o.truncated != 0;
    obj.difficult = o.difficult != 0;
    a.objects.push_back(std::move(obj));
  }
  return a;
}

inline std::pair<Annotation, std::vector<std::uint8_t>> decode_example(std::span<const std::uint8_t> bytes,
                                                                       const LabelMap& labels) {
  ExampleRecord rec = parse_example(bytes);
  Annotation a = annotation_of(rec, labels);
  return {std::move(a), std::move(rec.encoded)};
}

}  // namespace signdet
