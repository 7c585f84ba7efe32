#pragma once

#include <stdexcept>
#include <string>

namespace tve {

enum class ErrorCode {
  NonPositiveDeterminant,
  NegativeTemperature,
  AlphaOutOfRange,
  GridTooSmall,
  ShapeMismatch,
  InvalidInitialDatum,
  LineSearchFailed,
  MaxIterExceeded,
  NewtonDiverged,
  SingularSystem,
  TimeOutOfRange,
  NonNestedLadder,
  InsufficientLadder,
  InvalidNormSpec,
  ConfigParseError,
  InvariantFailure,
};

const char* to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}
  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::NonPositiveDeterminant: return "NonPositiveDeterminant";
    case ErrorCode::NegativeTemperature: return "NegativeTemperature";
    case ErrorCode::AlphaOutOfRange: return "AlphaOutOfRange";
    case ErrorCode::GridTooSmall: return "GridTooSmall";
    case ErrorCode::ShapeMismatch: return "ShapeMismatch";
    case ErrorCode::InvalidInitialDatum: return "InvalidInitialDatum";
    case ErrorCode::LineSearchFailed: return "LineSearchFailed";
    case ErrorCode::MaxIterExceeded: return "MaxIterExceeded";
    case ErrorCode::NewtonDiverged: return "NewtonDiverged";
    case ErrorCode::SingularSystem: return "SingularSystem";
    case ErrorCode::TimeOutOfRange: return "TimeOutOfRange";
    case ErrorCode::NonNestedLadder: return "NonNestedLadder";
    case ErrorCode::InsufficientLadder: return "InsufficientLadder";
    case ErrorCode::InvalidNormSpec: return "InvalidNormSpec";
    case ErrorCode::ConfigParseError: return "ConfigParseError";
    case ErrorCode::InvariantFailure: return "InvariantFailure";
  }
  return "Unknown";
}

}  // namespace tve
