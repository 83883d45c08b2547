#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace signdet {

enum class ErrorKind {
  DegenerateBox,
  NonFiniteResult,
  InvalidSpec,
  InvalidInput,
  ShapeError,
  StateError,
  NotFound,
  CorruptCheckpoint,
  ParseError,
  SchemaError,
  ValidationError,
  UnknownLabel,
  DecodeError,
  CorruptRecord,
  TruncatedFile,
  SourceExhausted,
  SessionAborted,
  IoError,
};

inline constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::DegenerateBox: return "DegenerateBox";
    case ErrorKind::NonFiniteResult: return "NonFiniteResult";
    case ErrorKind::InvalidSpec: return "InvalidSpec";
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::StateError: return "StateError";
    case ErrorKind::NotFound: return "NotFound";
    case ErrorKind::CorruptCheckpoint: return "CorruptCheckpoint";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::SchemaError: return "SchemaError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::UnknownLabel: return "UnknownLabel";
    case ErrorKind::DecodeError: return "DecodeError";
    case ErrorKind::CorruptRecord: return "CorruptRecord";
    case ErrorKind::TruncatedFile: return "TruncatedFile";
    case ErrorKind::SourceExhausted: return "SourceExhausted";
    case ErrorKind::SessionAborted: return "SessionAborted";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the kinds above so
/// callers (the CLI in particular) can map it to an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        detail_(message) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorKind kind_;
  std::string detail_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& message) {
  throw Error(kind, message);
}

}  // namespace signdet
