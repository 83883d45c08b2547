#pragma once

// Label map text format:
//
//   item {
//     name: "A"
//     id: 1
//   }
//
// ids start at 1 and are contiguous; 0 is reserved for background.

#include <algorithm>
#include <charconv>
#include <cctype>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "signdet/error.hpp"

namespace signdet {

struct LabelEntry {
  std::string name;
  int id = 0;

  friend bool operator==(const LabelEntry&, const LabelEntry&) = default;
};

class LabelMap {
 public:
  LabelMap() = default;

  explicit LabelMap(std::vector<LabelEntry> entries) : entries_(std::move(entries)) {
    std::map<int, bool> ids;
    for (const auto& e : entries_) {
      if (e.name.empty()) fail(ErrorKind::ValidationError, "label map entry with empty name");
      if (by_name_.count(e.name)) fail(ErrorKind::ValidationError, "duplicate label name \"" + e.name + "\"");
      if (ids.count(e.id)) fail(ErrorKind::ValidationError, "duplicate label id " + std::to_string(e.id));
      by_name_[e.name] = e.id;
      ids[e.id] = true;
    }
    int expected = 1;
    for (const auto& [id, _] : ids) {
      if (id != expected) {
        fail(ErrorKind::ValidationError, "label ids must be contiguous from 1; missing id " + std::to_string(expected));
      }
      ++expected;
    }
    std::sort(entries_.begin(), entries_.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  }

  static LabelMap from_names(const std::vector<std::string>& names) {
    std::vector<LabelEntry> entries;
    for (std::size_t i = 0; i < names.size(); ++i) entries.push_back({names[i], static_cast<int>(i + 1)});
    return LabelMap(std::move(entries));
  }

  /// A..Z mapped to 1..26.
  static LabelMap alphabet() {
    std::vector<std::string> names;
    for (char c = 'A'; c <= 'Z'; ++c) names.emplace_back(1, c);
    return from_names(names);
  }

  std::size_t size() const noexcept { return entries_.size(); }
  bool empty() const noexcept { return entries_.empty(); }
  const std::vector<LabelEntry>& entries() const noexcept { return entries_; }

  std::optional<int> id_of(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  int require_id(std::string_view name) const {
    auto id = id_of(name);
    if (!id) fail(ErrorKind::UnknownLabel, "label \"" + std::string(name) + "\" is not in the label map");
    return *id;
  }

  const std::string& name_of(int id) const {
    if (id < 1 || id > static_cast<int>(entries_.size())) {
      fail(ErrorKind::UnknownLabel, "label id " + std::to_string(id) + " is not in the label map");
    }
    return entries_[static_cast<std::size_t>(id - 1)].name;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& e : entries_) out.push_back(e.name);
    return out;
  }

  friend bool operator==(const LabelMap& a, const LabelMap& b) { return a.entries_ == b.entries_; }

 private:
  std::vector<LabelEntry> entries_;
  std::map<std::string, int, std::less<>> by_name_;
};

inline std::string write_label_map(const LabelMap& m) {
  std::string out;
  for (const auto& e : m.entries()) {
    out += "item {\n  name: \"";
    for (char c : e.name) {
      if (c == '"' || c == '\\') out += '\\';
      out += c;
    }
    out += "\"\n  id: " + std::to_string(e.id) + "\n}\n";
  }
  return out;
}

namespace detail {

class PbtxtLexer {
 public:
  explicit PbtxtLexer(std::string_view text) : text_(text) {}

  enum class Kind { Ident, String, Number, Colon, Open, Close, End };
  struct Token {
    Kind kind;
    std::string text;
    int line;
  };

  Token next() {
    skip();
    if (pos_ >= text_.size()) return {Kind::End, "", line_};
    const char c = text_[pos_];
    if (c == '{') return ++pos_, Token{Kind::Open, "{", line_};
    if (c == '}') return ++pos_, Token{Kind::Close, "}", line_};
    if (c == ':') return ++pos_, Token{Kind::Colon, ":", line_};
    if (c == '"' || c == '\'') {
      const char quote = c;
      std::string s;
      ++pos_;
      while (pos_ < text_.size() && text_[pos_] != quote) {
        if (text_[pos_] == '\n') break;
        if (text_[pos_] == '\\' && pos_ + 1 < text_.size()) ++pos_;
        s += text_[pos_++];
      }
      if (pos_ >= text_.size() || text_[pos_] != quote) {
        fail(ErrorKind::ParseError, "line " + std::to_string(line_) + ": unterminated string");
      }
      ++pos_;
      return {Kind::String, s, line_};
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '-') {
      std::string s;
      while (pos_ < text_.size() && (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '-')) {
        s += text_[pos_++];
      }
      return {Kind::Number, s, line_};
    }
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::string s;
      while (pos_ < text_.size() && (std::isalnum(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '_')) {
        s += text_[pos_++];
      }
      return {Kind::Ident, s, line_};
    }
    fail(ErrorKind::ParseError, "line " + std::to_string(line_) + ": unexpected character '" + std::string(1, c) + "'");
  }

 private:
  void skip() {
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '\n') {
        ++line_;
        ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c)) || c == ',' || c == ';') {
        ++pos_;
      } else if (c == '#') {
        while (pos_ < text_.size() && text_[pos_] != '\n') ++pos_;
      } else {
        break;
      }
    }
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  int line_ = 1;
};

}  // namespace detail

inline LabelMap parse_label_map(std::string_view text) {
  using Lexer = detail::PbtxtLexer;
  Lexer lex(text);
  std::vector<LabelEntry> entries;
  auto expect = [&](Lexer::Kind kind, const char* what) {
    auto t = lex.next();
    if (t.kind != kind) {
      fail(ErrorKind::ParseError, "line " + std::to_string(t.line) + ": expected " + what + ", got '" + t.text + "'");
    }
    return t;
  };
  for (;;) {
    auto t = lex.next();
    if (t.kind == Lexer::Kind::End) break;
    if (t.kind != Lexer::Kind::Ident || t.text != "item") {
      fail(ErrorKind::ParseError, "line " + std::to_string(t.line) + ": expected 'item', got '" + t.text + "'");
    }
    expect(Lexer::Kind::Open, "'{'");
    std::optional<std::string> name;
    std::optional<int> id;
    for (;;) {
      auto field = lex.next();
      if (field.kind == Lexer::Kind::Close) break;
      if (field.kind != Lexer::Kind::Ident) {
        fail(ErrorKind::ParseError, "line " + std::to_string(field.line) + ": expected a field name");
      }
      expect(Lexer::Kind::Colon, "':'");
      auto value = lex.next();
      if (field.text == "name") {
        if (value.kind != Lexer::Kind::String) fail(ErrorKind::ParseError, "line " + std::to_string(value.line) + ": name must be a string");
        name = value.text;
      } else if (field.text == "id") {
        if (value.kind != Lexer::Kind::Number) fail(ErrorKind::ParseError, "line " + std::to_string(value.line) + ": id must be an integer");
        int v = 0;
        const char* end = value.text.data() + value.text.size();
        const auto res = std::from_chars(value.text.data(), end, v);
        if (res.ec != std::errc{} || res.ptr != end) {
          fail(ErrorKind::ParseError, "line " + std::to_string(value.line) + ": bad id '" + value.text + "'");
        }
        id = v;
      } else if (value.kind != Lexer::Kind::String && value.kind != Lexer::Kind::Number &&
                 value.kind != Lexer::Kind::Ident) {
        fail(ErrorKind::ParseError, "line " + std::to_string(value.line) + ": bad value for " + field.text);
      }
    }
    if (!name || !id) fail(ErrorKind::ValidationError, "label map item needs both name and id");
    entries.push_back({*name, *id});
  }
  return LabelMap(std::move(entries));
}

}  // namespace signdet
