#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace kolmolab {

enum class ErrorCode {
  // structure / lie group
  MonotonicityViolation,
  RankDeficient,
  ShapeMismatch,
  NonFinite,
  NonPositiveTime,
  NonPositiveScale,
  // kernel
  SingularCovariance,
  GridTooCoarse,
  // convolution
  IncompatibleGrids,
  ExponentMismatch,
  ExponentOutOfRange,
  // sampling
  FactorizationFailure,
  // finite differences
  NotOnKBoundary,
  CFLViolation,
  EllipticityViolation,
  HypothesisViolation,
  // level-set iteration
  InvalidTruncation,
  Eps0OutOfRange,
  InvalidQPrime,
  QTildeTooSmall,
  BadParameters,
  ScheduleStall,
  // configuration and files
  ParseError,
  SchemaError,
  IoError,
};

/// Broad class of a failure; the CLI maps it onto its exit code.
enum class ErrorKind { Usage, Validation, Numerical };

std::string_view to_string(ErrorCode code) noexcept;
ErrorKind kind_of(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message);

  ErrorCode code() const noexcept { return code_; }
  ErrorKind kind() const noexcept { return kind_of(code_); }
  /// The message without the code prefix that what() carries.
  const std::string& message() const noexcept { return message_; }

 private:
  ErrorCode code_;
  std::string message_;
};

}  // namespace kolmolab
