#pragma once

// Training log lines, one event = two lines:
//
//   Step 10000 per-step time 1.649s
//   {'Loss/classification_loss': 0.12946561, 'Loss/localization_loss': 0.01821224,
//    'Loss/regularization_loss': 0.1009706, 'Loss/total_loss': 0.24864845,
//    'learning_rate': 0.07352352}
//
// (the dictionary is a single line). Values print as the shortest decimal
// that round-trips the float32 value, in fixed notation, padded to at least
// six decimals.

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <optional>
#include <regex>
#include <string>
#include <string_view>
#include <vector>

#include "signdet/error.hpp"
#include "signdet/multibox.hpp"

namespace signdet {

inline constexpr std::array<std::string_view, 5> kTrainingLogKeys{
    "Loss/classification_loss", "Loss/localization_loss", "Loss/regularization_loss", "Loss/total_loss",
    "learning_rate"};

inline std::string format_log_value(double value) {
  std::array<char, 128> buf{};
  const auto res = std::to_chars(buf.data(), buf.data() + buf.size(), static_cast<float>(value),
                                 std::chars_format::fixed);
  std::string s(buf.data(), res.ptr);
  auto dot = s.find('.');
  if (dot == std::string::npos) {
    s += '.';
    dot = s.size() - 1;
  }
  while (s.size() - dot - 1 < 6) s += '0';
  return s;
}

inline std::vector<std::string> format_training_log(std::uint64_t step, double per_step_seconds,
                                                    const LossBreakdown& b) {
  char head[96];
  std::snprintf(head, sizeof head, "Step %llu per-step time %.3fs", static_cast<unsigned long long>(step),
                per_step_seconds);
  const std::array<double, 5> values{b.classification_loss, b.localization_loss, b.regularization_loss,
                                     b.total_loss, b.learning_rate};
  std::string dict = "{";
  for (std::size_t k = 0; k < values.size(); ++k) {
    if (k) dict += ", ";
    dict += "'";
    dict += kTrainingLogKeys[k];
    dict += "': ";
    dict += format_log_value(values[k]);
  }
  dict += "}";
  return {head, dict};
}

struct TrainingLogRecord {
  std::uint64_t step = 0;
  double per_step_seconds = 0.0;
  LossBreakdown breakdown;
};

/// Parses lines produced by format_training_log (other lines are skipped).
/// Values come back as the float32 numbers that were printed.
inline std::vector<TrainingLogRecord> parse_training_log(const std::vector<std::string>& lines) {
  static const std::regex step_re(R"(Step (\d+) per-step time ([0-9.]+)s)");
  static const std::regex pair_re(R"('([A-Za-z_/]+)': (-?[0-9.]+))");
  std::vector<TrainingLogRecord> out;
  std::optional<TrainingLogRecord> pending;
  for (const auto& line : lines) {
    std::smatch m;
    if (std::regex_search(line, m, step_re)) {
      pending = TrainingLogRecord{std::stoull(m[1].str()), std::stod(m[2].str()), {}};
      continue;
    }
    if (!pending || line.find('{') == std::string::npos) continue;
    double* slots[5] = {&pending->breakdown.classification_loss, &pending->breakdown.localization_loss,
                        &pending->breakdown.regularization_loss, &pending->breakdown.total_loss,
                        &pending->breakdown.learning_rate};
    std::size_t next = 0;
    for (auto it = std::sregex_iterator(line.begin(), line.end(), pair_re); it != std::sregex_iterator(); ++it) {
      const std::string key = (*it)[1].str();
      if (next >= kTrainingLogKeys.size() || key != kTrainingLogKeys[next]) {
        fail(ErrorKind::ParseError, "unexpected key '" + key + "' in training log");
      }
      const std::string text = (*it)[2].str();
      float v = 0.0f;
      const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
      if (res.ec != std::errc{}) fail(ErrorKind::ParseError, "bad number '" + text + "' in training log");
      *slots[next] = v;
      ++next;
    }
    if (next != kTrainingLogKeys.size()) fail(ErrorKind::ParseError, "training log dictionary is incomplete");
    out.push_back(*pending);
    pending.reset();
  }
  return out;
}

}  // namespace signdet
