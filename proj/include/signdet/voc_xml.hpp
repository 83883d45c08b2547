#pragma once

// VOC annotation XML, the dialect LabelImg writes:
//
//   annotation{ folder, filename, path, source{database},
//               size{width,height,depth}, segmented,
//               object*{name, pose, truncated, difficult,
//                       bndbox{xmin,ymin,xmax,ymax}} }
//
// Parsing goes through boost::property_tree; writing emits the canonical
// element order above with tab indentation.

#include <cmath>
#include <cstdint>
#include <sstream>
#include <string>
#include <string_view>

#include <boost/property_tree/ptree.hpp>
#include <boost/property_tree/xml_parser.hpp>

#include "signdet/annotation.hpp"
#include "signdet/error.hpp"

namespace signdet {

namespace detail {

inline std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      case '\'': out += "&apos;"; break;
      default: out += c;
    }
  }
  return out;
}

using boost::property_tree::ptree;

inline const ptree& require_child(const ptree& node, const std::string& name, const std::string& context) {
  auto child = node.get_child_optional(name);
  if (!child) fail(ErrorKind::SchemaError, "missing element <" + name + "> in " + context);
  return *child;
}

inline std::string trimmed(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

inline int require_int(const ptree& node, const std::string& name, const std::string& context) {
  const std::string text = trimmed(require_child(node, name, context).data());
  try {
    std::size_t used = 0;
    const double v = std::stod(text, &used);
    if (used != text.size() || v != std::floor(v) || std::abs(v) > 1e9) throw std::invalid_argument(text);
    return static_cast<int>(v);
  } catch (const std::exception&) {
    fail(ErrorKind::SchemaError, "element <" + name + "> in " + context + " is not an integer: '" + text + "'");
  }
}

inline int optional_int(const ptree& node, const std::string& name, const std::string& context, int fallback) {
  if (!node.get_child_optional(name)) return fallback;
  return require_int(node, name, context);
}

}  // namespace detail

inline Annotation parse_voc_xml(std::string_view xml) {
  using detail::ptree;
  ptree tree;
  try {
    std::istringstream in{std::string(xml)};
    boost::property_tree::read_xml(in, tree);
  } catch (const boost::property_tree::xml_parser_error& e) {
    fail(ErrorKind::ParseError, "line " + std::to_string(e.line()) + ": " + e.message());
  }
  const ptree& root = detail::require_child(tree, "annotation", "document");
  Annotation a;
  a.folder = detail::trimmed(root.get("folder", ""));
  a.filename = detail::trimmed(detail::require_child(root, "filename", "annotation").data());
  a.path = detail::trimmed(root.get("path", ""));
  a.database = detail::trimmed(root.get("source.database", "Unknown"));
  const ptree& size = detail::require_child(root, "size", "annotation");
  a.width = detail::require_int(size, "width", "size");
  a.height = detail::require_int(size, "height", "size");
  a.depth = detail::optional_int(size, "depth", "size", 3);
  a.segmented = detail::optional_int(root, "segmented", "annotation", 0) != 0;
  std::size_t index = 0;
  for (const auto& [tag, node] : root) {
    if (tag != "object") continue;
    const std::string ctx = "object[" + std::to_string(index++) + "]";
    AnnotatedObject o;
    o.name = detail::trimmed(detail::require_child(node, "name", ctx).data());
    o.pose = detail::trimmed(node.get("pose", "Unspecified"));
    o.truncated = detail::optional_int(node, "truncated", ctx, 0) != 0;
    o.difficult = detail::optional_int(node, "difficult", ctx, 0) != 0;
    const ptree& bb = detail::require_child(node, "bndbox", ctx);
    o.box.xmin = detail::require_int(bb, "xmin", ctx + ".bndbox");
    o.box.ymin = detail::require_int(bb, "ymin", ctx + ".bndbox");
    o.box.xmax = detail::require_int(bb, "xmax", ctx + ".bndbox");
    o.box.ymax = detail::require_int(bb, "ymax", ctx + ".bndbox");
    a.objects.push_back(std::move(o));
  }
  validate_annotation(a);
  return a;
}

inline std::string write_voc_xml(const Annotation& a) {
  validate_annotation(a);
  using detail::xml_escape;
  std::ostringstream out;
  out << "<annotation>\n";
  out << "\t<folder>" << xml_escape(a.folder) << "</folder>\n";
  out << "\t<filename>" << xml_escape(a.filename) << "</filename>\n";
  out << "\t<path>" << xml_escape(a.path) << "</path>\n";
  out << "\t<source>\n\t\t<database>" << xml_escape(a.database) << "</database>\n\t</source>\n";
  out << "\t<size>\n\t\t<width>" << a.width << "</width>\n\t\t<height>" << a.height << "</height>\n\t\t<depth>"
      << a.depth << "</depth>\n\t</size>\n";
  out << "\t<segmented>" << (a.segmented ? 1 : 0) << "</segmented>\n";
  for (const auto& o : a.objects) {
    out << "\t<object>\n";
    out << "\t\t<name>" << xml_escape(o.name) << "</name>\n";
    out << "\t\t<pose>" << xml_escape(o.pose) << "</pose>\n";
    out << "\t\t<truncated>" << (o.truncated ? 1 : 0) << "</truncated>\n";
    out << "\t\t<difficult>" << (o.difficult ? 1 : 0) << "</difficult>\n";
    out << "\t\t<bndbox>\n";
    out << "\t\t\t<xmin>" << o.box.xmin << "</xmin>\n";
    out << "\t\t\t<ymin>" << o.box.ymin << "</ymin>\n";
    out << "\t\t\t<xmax>" << o.box.xmax << "</xmax>\n";
    out << "\t\t\t<ymax>" << o.box.ymax << "</ymax>\n";
    out << "\t\t</bndbox>\n";
    out << "\t</object>\n";
  }
  out << "</annotation>\n";
  return out.str();
}

}  // namespace signdet
