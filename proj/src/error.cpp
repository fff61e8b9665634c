#include "homnet/error.hpp"

namespace homnet {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::TooSmall: return "TooSmall";
    case ErrorCode::TooLong: return "TooLong";
    case ErrorCode::InvalidType: return "InvalidType";
    case ErrorCode::InvalidBand: return "InvalidBand";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::SpanOutOfRange: return "SpanOutOfRange";
    case ErrorCode::MissingDonor: return "MissingDonor";
    case ErrorCode::EmptyBag: return "EmptyBag";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::EmptyDataset: return "EmptyDataset";
    case ErrorCode::SubjectOverlap: return "SubjectOverlap";
    case ErrorCode::SingleClass: return "SingleClass";
    case ErrorCode::DegenerateLength: return "DegenerateLength";
    case ErrorCode::FreezeNameUnresolved: return "FreezeNameUnresolved";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonScalarRoot: return "NonScalarRoot";
    case ErrorCode::BadMagic: return "BadMagic";
    case ErrorCode::VersionUnsupported: return "VersionUnsupported";
    case ErrorCode::TruncatedFile: return "TruncatedFile";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorCategory category(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch:
    case ErrorCode::NonFinite:
    case ErrorCode::NonScalarRoot:
      return ErrorCategory::Numeric;
    case ErrorCode::BadMagic:
    case ErrorCode::VersionUnsupported:
    case ErrorCode::TruncatedFile:
    case ErrorCode::IoError:
      return ErrorCategory::Io;
    default:
      return ErrorCategory::Data;
  }
}

}  // namespace homnet
