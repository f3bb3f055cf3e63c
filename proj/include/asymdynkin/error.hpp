#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace asymdynkin {

enum class ErrorCode {
  ShapeMismatch,
  NotMonotone,
  TerminalNotOne,
  OutOfRange,
  IndexOutOfRange,
  InvalidTree,
  InvalidPayoff,
  EnumerationCapExceeded,
  NumericalFailure,
  NoConvergence,
  CFLViolation,
  DomainExit,
  ParseError,
};

inline std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::NotMonotone: return "NotMonotone";
    case ErrorCode::TerminalNotOne: return "TerminalNotOne";
    case ErrorCode::OutOfRange: return "OutOfRange";
    case ErrorCode::IndexOutOfRange: return "IndexOutOfRange";
    case ErrorCode::InvalidTree: return "InvalidTree";
    case ErrorCode::InvalidPayoff: return "InvalidPayoff";
    case ErrorCode::EnumerationCapExceeded: return "EnumerationCapExceeded";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::CFLViolation: return "CFLViolation";
    case ErrorCode::DomainExit: return "DomainExit";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

/// Exception carrying a machine-readable error code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace asymdynkin
