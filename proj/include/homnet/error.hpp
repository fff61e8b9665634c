#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace homnet {

enum class ErrorCode {
  // input data
  TooSmall,
  TooLong,
  InvalidType,
  InvalidBand,
  ParseError,
  InvariantViolation,
  SpanOutOfRange,
  MissingDonor,
  EmptyBag,
  EmptyInput,
  EmptyDataset,
  SubjectOverlap,
  SingleClass,
  DegenerateLength,
  FreezeNameUnresolved,
  // numerics
  ShapeMismatch,
  NonFinite,
  NonScalarRoot,
  // checkpoint / filesystem
  BadMagic,
  VersionUnsupported,
  TruncatedFile,
  IoError,
};

enum class ErrorCategory { Data, Numeric, Io };

std::string_view to_string(ErrorCode code);
ErrorCategory category(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code), detail_(what) {}

  ErrorCode code() const noexcept { return code_; }
  /// Message without the code prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
};

}  // namespace homnet
