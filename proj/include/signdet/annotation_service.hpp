#pragma once

// HTTP front for the image corpus and its VOC annotations.
//
//   GET  /api/labelmap
//   GET  /api/images
//   GET  /api/images/{id}               encoded image bytes
//   GET  /api/images/{id}/annotation    JSON, or VOC XML with Accept: application/xml
//   PUT  /api/images/{id}/annotation    JSON or VOC XML body
//
// An id is the image path relative to the dataset root ("A/A.<uuid>.ppm").
// Annotation responses carry an ETag holding a content hash of the stored
// XML. Writes are last-write-wins; a PUT whose If-Match no longer matches
// still succeeds but reports the overwritten version.

#include <algorithm>
#include <cstdio>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <httplib.h>
#include <json.hpp>

#include "signdet/annotation.hpp"
#include "signdet/error.hpp"
#include "signdet/fs_util.hpp"
#include "signdet/image.hpp"
#include "signdet/label_map.hpp"
#include "signdet/random.hpp"
#include "signdet/voc_xml.hpp"

namespace signdet {

struct ImageEntry {
  std::string id;
  std::string label;  // top-level folder, empty for files directly under the root
  int width = 0;
  int height = 0;
  bool annotated = false;
};

inline std::string annotation_version(const std::string& xml) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(fnv1a(xml)));
  return buf;
}

/// JSON form: { width, height, objects: [ { label, xmin, ymin, xmax, ymax } ] }.
inline nlohmann::json annotation_to_json(const Annotation& a) {
  nlohmann::json j{{"width", a.width}, {"height", a.height}, {"objects", nlohmann::json::array()}};
  for (const auto& o : a.objects) {
    j["objects"].push_back(
        {{"label", o.name}, {"xmin", o.box.xmin}, {"ymin", o.box.ymin}, {"xmax", o.box.xmax}, {"ymax", o.box.ymax}});
  }
  return j;
}

class AnnotationService {
 public:
  AnnotationService(fs::path root, LabelMap labels) : labels_(std::move(labels)) {
    std::error_code ec;
    root_ = fs::canonical(root, ec);
    if (ec || !fs::is_directory(root_)) fail(ErrorKind::IoError, "dataset root does not exist: " + root.string());
  }

  const fs::path& root() const noexcept { return root_; }

  std::vector<ImageEntry> list_images() const {
    std::vector<ImageEntry> out;
    for (const auto& e : fs::recursive_directory_iterator(root_)) {
      if (!e.is_regular_file() || !is_image_format(image_format_of(e.path().filename().string()))) continue;
      ImageEntry entry;
      const fs::path rel = fs::relative(e.path(), root_);
      entry.id = rel.generic_string();
      entry.label = rel.has_parent_path() ? rel.begin()->generic_string() : std::string{};
      if (auto dims = probe_image_size(read_file_bytes(e.path()))) {
        entry.width = dims->first;
        entry.height = dims->second;
      }
      entry.annotated = fs::exists(fs::path(e.path()).replace_extension(".xml"));
      out.push_back(std::move(entry));
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
    return out;
  }

  /// Absolute path of an image id, or nullopt for anything that is not an
  /// image file inside the root.
  std::optional<fs::path> resolve(const std::string& id) const {
    if (id.empty() || id.find('\0') != std::string::npos) return std::nullopt;
    const fs::path rel(id);
    if (rel.is_absolute()) return std::nullopt;
    for (const auto& part : rel) {
      if (part == ".." || part == ".") return std::nullopt;
    }
    std::error_code ec;
    const fs::path full = fs::weakly_canonical(root_ / rel, ec);
    if (ec) return std::nullopt;
    const auto [r, _] = std::mismatch(root_.begin(), root_.end(), full.begin(), full.end());
    if (r != root_.end()) return std::nullopt;
    if (!fs::is_regular_file(full, ec) || !is_image_format(image_format_of(full.filename().string()))) {
      return std::nullopt;
    }
    return full;
  }

  void attach(httplib::Server& server) {
    server.Get("/api/labelmap", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json j{{"labels", nlohmann::json::array()}};
      for (const auto& e : labels_.entries()) j["labels"].push_back({{"name", e.name}, {"id", e.id}});
      send_json(res, 200, j);
    });
    server.Get("/api/images", [this](const httplib::Request&, httplib::Response& res) {
      nlohmann::json j{{"images", nlohmann::json::array()}};
      for (const auto& e : list_images()) {
        j["images"].push_back({{"id", e.id},
                               {"label", e.label},
                               {"width", e.width},
                               {"height", e.height},
                               {"annotated", e.annotated}});
      }
      send_json(res, 200, j);
    });
    server.Get(R"(/api/images/(.+)/annotation)", [this](const httplib::Request& req, httplib::Response& res) {
      get_annotation(req, res);
    });
    server.Put(R"(/api/images/(.+)/annotation)", [this](const httplib::Request& req, httplib::Response& res) {
      put_annotation(req, res);
    });
    server.Get(R"(/api/images/(.+))", [this](const httplib::Request& req, httplib::Response& res) {
      const auto path = resolve(req.matches[1]);
      if (!path) return not_found(res, req.matches[1]);
      const auto bytes = read_file_bytes(*path);
      res.status = 200;
      res.set_content(std::string(bytes.begin(), bytes.end()),
                      image_content_type(image_format_of(path->filename().string())));
    });
  }

 private:
  static void send_json(httplib::Response& res, int status, const nlohmann::json& j) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  static void not_found(httplib::Response& res, const std::string& id) {
    send_json(res, 404, {{"error", "not found"}, {"id", id}});
  }

  static void unprocessable(httplib::Response& res, const std::vector<FieldError>& errs) {
    nlohmann::json j{{"error", "invalid annotation"}, {"errors", nlohmann::json::array()}};
    for (const auto& e : errs) j["errors"].push_back({{"field", e.field}, {"message", e.message}});
    send_json(res, 422, j);
  }

  std::shared_ptr<std::mutex> lock_for(const std::string& id) {
    std::lock_guard g(locks_mu_);
    auto& m = locks_[id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
  }

  void get_annotation(const httplib::Request& req, httplib::Response& res) {
    const auto path = resolve(req.matches[1]);
    if (!path) return not_found(res, req.matches[1]);
    const fs::path xml_path = fs::path(*path).replace_extension(".xml");
    std::string xml;
    try {
      xml = read_file_text(xml_path);
    } catch (const Error&) {
      return send_json(res, 404, {{"error", "no annotation"}, {"id", std::string(req.matches[1])}});
    }
    res.set_header("ETag", "\"" + annotation_version(xml) + "\"");
    if (req.get_header_value("Accept").find("xml") != std::string::npos) {
      res.status = 200;
      res.set_content(xml, "application/xml");
      return;
    }
    try {
      send_json(res, 200, annotation_to_json(parse_voc_xml(xml)));
    } catch (const Error& e) {
      send_json(res, 500, {{"error", "stored annotation is unreadable"}, {"detail", e.detail()}});
    }
  }

  /// Decodes a PUT body, collecting field errors instead of stopping at the first.
  std::optional<Annotation> decode_body(const httplib::Request& req, std::vector<FieldError>& errs) const {
    const std::string type = req.get_header_value("Content-Type");
    const auto first = req.body.find_first_not_of(" \t\r\n");
    const bool is_xml = type.find("xml") != std::string::npos ||
                        (first != std::string::npos && req.body[first] == '<');
    if (is_xml) {
      try {
        return parse_voc_xml(req.body);
      } catch (const Error& e) {
        errs.push_back({"body", e.detail()});
        return std::nullopt;
      }
    }
    const auto j = nlohmann::json::parse(req.body, nullptr, false);
    if (j.is_discarded() || !j.is_object()) {
      errs.push_back({"body", "expected a JSON object or VOC XML"});
      return std::nullopt;
    }
    Annotation a;
    auto int_field = [&](const nlohmann::json& obj, const char* key, const std::string& where, int& out) {
      auto it = obj.find(key);
      if (it == obj.end() || !it->is_number_integer()) {
        errs.push_back({where + key, "required integer"});
        return;
      }
      out = it->get<int>();
    };
    int_field(j, "width", "", a.width);
    int_field(j, "height", "", a.height);
    const auto objs = j.find("objects");
    if (objs == j.end() || !objs->is_array()) {
      errs.push_back({"objects", "required array"});
      return std::nullopt;
    }
    for (std::size_t i = 0; i < objs->size(); ++i) {
      const auto& o = (*objs)[i];
      const std::string where = "object[" + std::to_string(i) + "].";
      if (!o.is_object()) {
        errs.push_back({where.substr(0, where.size() - 1), "expected an object"});
        continue;
      }
      AnnotatedObject obj;
      if (auto it = o.find("label"); it != o.end() && it->is_string()) {
        obj.name = it->get<std::string>();
      } else {
        errs.push_back({where + "label", "required string"});
      }
      int_field(o, "xmin", where, obj.box.xmin);
      int_field(o, "ymin", where, obj.box.ymin);
      int_field(o, "xmax", where, obj.box.xmax);
      int_field(o, "ymax", where, obj.box.ymax);
      a.objects.push_back(std::move(obj));
    }
    if (!errs.empty()) return std::nullopt;
    return a;
  }

  void put_annotation(const httplib::Request& req, httplib::Response& res) {
    const std::string id = req.matches[1];
    const auto path = resolve(id);
    if (!path) return not_found(res, id);

    std::vector<FieldError> errs;
    auto decoded = decode_body(req, errs);
    if (!decoded) return unprocessable(res, errs);
    Annotation a = std::move(*decoded);

    const fs::path rel = fs::relative(*path, root_);
    a.folder = rel.has_parent_path() ? rel.parent_path().filename().generic_string() : root_.filename().generic_string();
    a.filename = path->filename().string();
    a.path = rel.generic_string();
    if (auto dims = probe_image_size(read_file_bytes(*path))) {
      if (a.width != dims->first) errs.push_back({"width", "image is " + std::to_string(dims->first) + " pixels wide"});
      if (a.height != dims->second) errs.push_back({"height", "image is " + std::to_string(dims->second) + " pixels high"});
    }
    for (auto& e : annotation_errors(a)) errs.push_back(std::move(e));
    for (std::size_t i = 0; i < a.objects.size(); ++i) {
      const auto& name = a.objects[i].name;
      if (!name.empty() && !labels_.id_of(name)) {
        errs.push_back({"object[" + std::to_string(i) + "].name", "unknown label \"" + name + "\""});
      }
    }
    if (!errs.empty()) return unprocessable(res, errs);

    const std::string xml = write_voc_xml(a);
    const std::string version = annotation_version(xml);
    const fs::path xml_path = fs::path(*path).replace_extension(".xml");
    std::optional<std::string> previous;
    {
      const auto m = lock_for(a.path);
      std::lock_guard g(*m);
      std::error_code ec;
      if (fs::exists(xml_path, ec)) previous = annotation_version(read_file_text(xml_path));
      write_file_atomic(xml_path, xml);
    }
    std::string expected = req.get_header_value("If-Match");
    expected.erase(std::remove(expected.begin(), expected.end(), '"'), expected.end());
    const bool overwrote = !expected.empty() && previous.value_or("") != expected;

    res.set_header("ETag", "\"" + version + "\"");
    if (previous) res.set_header("X-Previous-Version", *previous);
    send_json(res, 200,
              {{"id", a.path},
               {"version", version},
               {"previous_version", previous ? nlohmann::json(*previous) : nlohmann::json(nullptr)},
               {"overwrote_newer", overwrote}});
  }

  fs::path root_;
  LabelMap labels_;
  std::mutex locks_mu_;
  std::map<std::string, std::shared_ptr<std::mutex>> locks_;
};

}  // namespace signdet
