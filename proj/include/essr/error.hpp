#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace essr {

enum class ErrorKind {
  NotPositiveDefinite,
  ZeroVector,
  SolveFailure,
  EmptyClass,
  LabelOutOfRange,
  DegenerateColumn,
  ConfigInvalid,
  DimensionMismatch,
  ParseError,
  RaggedRows,
  EmptyFile,
  ZeroSample,
  InfeasibleSpec,
  ClassTooSmall,
  EmptyTrainSet,
  LengthMismatch,
  IoError,
  BadMagic,
  VersionUnsupported,
  ChecksumMismatch,
  Truncated,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the kinds above so
/// callers (and the CLI) can branch on it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::ZeroVector: return "ZeroVector";
    case ErrorKind::SolveFailure: return "SolveFailure";
    case ErrorKind::EmptyClass: return "EmptyClass";
    case ErrorKind::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::DegenerateColumn: return "DegenerateColumn";
    case ErrorKind::ConfigInvalid: return "ConfigInvalid";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::RaggedRows: return "RaggedRows";
    case ErrorKind::EmptyFile: return "EmptyFile";
    case ErrorKind::ZeroSample: return "ZeroSample";
    case ErrorKind::InfeasibleSpec: return "InfeasibleSpec";
    case ErrorKind::ClassTooSmall: return "ClassTooSmall";
    case ErrorKind::EmptyTrainSet: return "EmptyTrainSet";
    case ErrorKind::LengthMismatch: return "LengthMismatch";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::BadMagic: return "BadMagic";
    case ErrorKind::VersionUnsupported: return "VersionUnsupported";
    case ErrorKind::ChecksumMismatch: return "ChecksumMismatch";
    case ErrorKind::Truncated: return "Truncated";
  }
  return "Unknown";
}

}  // namespace essr
