#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace steer {

enum class ErrorKind {
  NotHermitian,
  NotPositive,
  BadTrace,
  NotUnitVector,
  NotTState,
  DegenerateT,
  DegenerateMap,
  EmptyMeasure,
  EmptySection,
  BadCount,
  QuadratureNotConverged,
  OutcomeOutsideBox,
  InvalidState,
  InvalidPerturbation,
  Parse,
  InvalidArgument,
};

inline std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotHermitian: return "NotHermitian";
    case ErrorKind::NotPositive: return "NotPositive";
    case ErrorKind::BadTrace: return "BadTrace";
    case ErrorKind::NotUnitVector: return "NotUnitVector";
    case ErrorKind::NotTState: return "NotTState";
    case ErrorKind::DegenerateT: return "DegenerateT";
    case ErrorKind::DegenerateMap: return "DegenerateMap";
    case ErrorKind::EmptyMeasure: return "EmptyMeasure";
    case ErrorKind::EmptySection: return "EmptySection";
    case ErrorKind::BadCount: return "BadCount";
    case ErrorKind::QuadratureNotConverged: return "QuadratureNotConverged";
    case ErrorKind::OutcomeOutsideBox: return "OutcomeOutsideBox";
    case ErrorKind::InvalidState: return "InvalidState";
    case ErrorKind::InvalidPerturbation: return "InvalidPerturbation";
    case ErrorKind::Parse: return "Parse";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library. The message names the violated
/// condition and, where there is one, its magnitude.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace steer
