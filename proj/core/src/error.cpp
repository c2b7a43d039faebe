#include "kolmolab/error.hpp"

namespace kolmolab {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::MonotonicityViolation: return "MonotonicityViolation";
    case ErrorCode::RankDeficient: return "RankDeficient";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NonPositiveTime: return "NonPositiveTime";
    case ErrorCode::NonPositiveScale: return "NonPositiveScale";
    case ErrorCode::SingularCovariance: return "SingularCovariance";
    case ErrorCode::GridTooCoarse: return "GridTooCoarse";
    case ErrorCode::IncompatibleGrids: return "IncompatibleGrids";
    case ErrorCode::ExponentMismatch: return "ExponentMismatch";
    case ErrorCode::ExponentOutOfRange: return "ExponentOutOfRange";
    case ErrorCode::FactorizationFailure: return "FactorizationFailure";
    case ErrorCode::NotOnKBoundary: return "NotOnKBoundary";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::EllipticityViolation: return "EllipticityViolation";
    case ErrorCode::HypothesisViolation: return "HypothesisViolation";
    case ErrorCode::InvalidTruncation: return "InvalidTruncation";
    case ErrorCode::Eps0OutOfRange: return "Eps0OutOfRange";
    case ErrorCode::InvalidQPrime: return "InvalidQPrime";
    case ErrorCode::QTildeTooSmall: return "QTildeTooSmall";
    case ErrorCode::BadParameters: return "BadParameters";
    case ErrorCode::ScheduleStall: return "ScheduleStall";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::IoError: return "IoError";
  }
  return "Unknown";
}

ErrorKind kind_of(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::SingularCovariance:
    case ErrorCode::GridTooCoarse:
    case ErrorCode::FactorizationFailure:
    case ErrorCode::ScheduleStall:
      return ErrorKind::Numerical;
    case ErrorCode::IoError:
      return ErrorKind::Usage;
    default:
      return ErrorKind::Validation;
  }
}

Error::Error(ErrorCode code, const std::string& message)
    : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code), message_(message) {}

}  // namespace kolmolab
