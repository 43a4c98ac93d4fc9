#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace bvlab {

enum class ErrorCode {
  NonFiniteValue,
  BadExponent,
  UnknownKind,
  ResolutionTooCoarse,
  IncompatibleTranslation,
  IncompatibleShift,
  LevelOverflow,
  EmptyWindow,
  ZeroFunction,
  SupportViolation,
  NonConvergentTail,
  BudgetExceeded,
  WindowTooSmall,
  MismatchedDecomposition,
  BadDimension,
  NoPositiveSupremum,
  NotAttained,
  LambdaOutOfRange,
  NonConvergence,
  SchemaError,
  EmptyCorpus,
  FormatError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::BadExponent: return "BadExponent";
    case ErrorCode::UnknownKind: return "UnknownKind";
    case ErrorCode::ResolutionTooCoarse: return "ResolutionTooCoarse";
    case ErrorCode::IncompatibleTranslation: return "IncompatibleTranslation";
    case ErrorCode::IncompatibleShift: return "IncompatibleShift";
    case ErrorCode::LevelOverflow: return "LevelOverflow";
    case ErrorCode::EmptyWindow: return "EmptyWindow";
    case ErrorCode::ZeroFunction: return "ZeroFunction";
    case ErrorCode::SupportViolation: return "SupportViolation";
    case ErrorCode::NonConvergentTail: return "NonConvergentTail";
    case ErrorCode::BudgetExceeded: return "BudgetExceeded";
    case ErrorCode::WindowTooSmall: return "WindowTooSmall";
    case ErrorCode::MismatchedDecomposition: return "MismatchedDecomposition";
    case ErrorCode::BadDimension: return "BadDimension";
    case ErrorCode::NoPositiveSupremum: return "NoPositiveSupremum";
    case ErrorCode::NotAttained: return "NotAttained";
    case ErrorCode::LambdaOutOfRange: return "LambdaOutOfRange";
    case ErrorCode::NonConvergence: return "NonConvergence";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::EmptyCorpus: return "EmptyCorpus";
    case ErrorCode::FormatError: return "FormatError";
  }
  return "Unknown";
}

/// Every failure raised by the library carries one of the codes above so
/// callers (the CLI in particular) can map it onto an exit status.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

}  // namespace bvlab
