#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace s2fix {

enum class ErrorCode {
  AntipodalEndpoints,
  DegenerateLoop,
  UnknownGenerator,
  UnknownField,
  NotInV1,
  NotNilpotent,
  NoRecurrenceFound,
  NoFixedPointsFound,
  FixedBasePoint,
  AntipodalOrbitStep,
  TruncationBeforeClosure,
  HypothesisViolation,
  NoConvergence,
  OrbitNotFinite,
  OrbitTrivial,
  ParseError,
  SchemaError,
  DanglingReference,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::AntipodalEndpoints: return "AntipodalEndpoints";
    case ErrorCode::DegenerateLoop: return "DegenerateLoop";
    case ErrorCode::UnknownGenerator: return "UnknownGenerator";
    case ErrorCode::UnknownField: return "UnknownField";
    case ErrorCode::NotInV1: return "NotInV1";
    case ErrorCode::NotNilpotent: return "NotNilpotent";
    case ErrorCode::NoRecurrenceFound: return "NoRecurrenceFound";
    case ErrorCode::NoFixedPointsFound: return "NoFixedPointsFound";
    case ErrorCode::FixedBasePoint: return "FixedBasePoint";
    case ErrorCode::AntipodalOrbitStep: return "AntipodalOrbitStep";
    case ErrorCode::TruncationBeforeClosure: return "TruncationBeforeClosure";
    case ErrorCode::HypothesisViolation: return "HypothesisViolation";
    case ErrorCode::NoConvergence: return "NoConvergence";
    case ErrorCode::OrbitNotFinite: return "OrbitNotFinite";
    case ErrorCode::OrbitTrivial: return "OrbitTrivial";
    case ErrorCode::ParseError: return "ParseError";
    case ErrorCode::SchemaError: return "SchemaError";
    case ErrorCode::DanglingReference: return "DanglingReference";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

// Process exit status associated with an error: 2 hypothesis violation,
// 3 no convergence, 4 input error.
constexpr int exit_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::NotInV1:
    case ErrorCode::NotNilpotent:
    case ErrorCode::HypothesisViolation:
    case ErrorCode::FixedBasePoint:
    case ErrorCode::AntipodalOrbitStep:
    case ErrorCode::AntipodalEndpoints:
    case ErrorCode::OrbitTrivial:
    case ErrorCode::DegenerateLoop:
      return 2;
    case ErrorCode::NoConvergence:
    case ErrorCode::NoRecurrenceFound:
    case ErrorCode::NoFixedPointsFound:
    case ErrorCode::TruncationBeforeClosure:
    case ErrorCode::OrbitNotFinite:
      return 3;
    case ErrorCode::UnknownGenerator:
    case ErrorCode::UnknownField:
    case ErrorCode::ParseError:
    case ErrorCode::SchemaError:
    case ErrorCode::DanglingReference:
    case ErrorCode::InvalidArgument:
      return 4;
  }
  return 4;
}

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace s2fix
