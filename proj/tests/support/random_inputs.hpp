#pragma once

#include <string>
#include <vector>

#include "signdet/annotation.hpp"
#include "signdet/label_map.hpp"
#include "signdet/random.hpp"

/// Printable text with XML and pbtxt metacharacters and some multi-byte
/// UTF-8, never starting or ending in whitespace.
inline std::string random_text(signdet::Rng& rng, int min_len = 1, int max_len = 12) {
  static const std::vector<std::string> pieces{"a", "Z", "7", "_", "-", "<", ">", "&", "\"", "'", "\\",
                                               "/", ".", "Ω", "é", "手", " ", "x", "q", "#"};
  std::string s;
  const int n = rng.range(min_len, max_len);
  for (int i = 0; i < n; ++i) {
    const std::string& p = pieces[rng.below(pieces.size())];
    if (p == " " && (i == 0 || i == n - 1)) {
      s += "k";
      continue;
    }
    s += p;
  }
  return s;
}

inline signdet::LabelMap random_label_map(signdet::Rng& rng, int max_size = 30) {
  std::vector<std::string> names;
  const int n = rng.range(1, max_size);
  while (static_cast<int>(names.size()) < n) {
    std::string name = random_text(rng) + std::to_string(names.size());
    names.push_back(std::move(name));
  }
  return signdet::LabelMap::from_names(names);
}

inline signdet::Annotation random_annotation(signdet::Rng& rng, const signdet::LabelMap& labels,
                                             int max_objects = 5) {
  signdet::Annotation a;
  a.folder = random_text(rng);
  a.filename = random_text(rng) + ".ppm";
  a.path = "/data/" + a.filename;
  a.width = rng.range(2, 4096);
  a.height = rng.range(2, 4096);
  a.depth = 3;
  a.segmented = rng.below(2) == 1;
  const int n = rng.range(0, max_objects);
  for (int i = 0; i < n; ++i) {
    signdet::AnnotatedObject o;
    o.name = labels.entries()[rng.below(labels.size())].name;
    const int x0 = rng.range(0, a.width - 1), y0 = rng.range(0, a.height - 1);
    o.box = {x0, y0, rng.range(x0 + 1, a.width), rng.range(y0 + 1, a.height)};
    o.pose = rng.below(3) == 0 ? "Unspecified" : random_text(rng);
    o.truncated = rng.below(2) == 1;
    o.difficult = rng.below(4) == 0;
    a.objects.push_back(std::move(o));
  }
  return a;
}

inline std::vector<std::uint8_t> random_bytes(signdet::Rng& rng, std::size_t max_len) {
  std::vector<std::uint8_t> b(rng.below(max_len + 1));
  for (auto& v : b) v = static_cast<std::uint8_t>(rng.next());
  return b;
}
