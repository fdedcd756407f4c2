#ifndef CDTOPT_ERROR_HPP
#define CDTOPT_ERROR_HPP

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>

namespace cdtopt {

enum class ErrorCode {
  InvalidInstance,
  DegenerateTheta,
  InvalidDual,
  NonFinite,
  NotBinary,
  Unsolved,
  DegenerateInstance,
  TooLarge,
  DimensionMismatch,
  InvalidModel,
  SolverBreakdown,
  MaxOuterExceeded,
  Io,
  Usage,
};

inline const char* to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::InvalidInstance: return "InvalidInstance";
    case ErrorCode::DegenerateTheta: return "DegenerateTheta";
    case ErrorCode::InvalidDual: return "InvalidDual";
    case ErrorCode::NonFinite: return "NonFinite";
    case ErrorCode::NotBinary: return "NotBinary";
    case ErrorCode::Unsolved: return "Unsolved";
    case ErrorCode::DegenerateInstance: return "DegenerateInstance";
    case ErrorCode::TooLarge: return "TooLarge";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::InvalidModel: return "InvalidModel";
    case ErrorCode::SolverBreakdown: return "SolverBreakdown";
    case ErrorCode::MaxOuterExceeded: return "MaxOuterExceeded";
    case ErrorCode::Io: return "Io";
    case ErrorCode::Usage: return "Usage";
  }
  return "Unknown";
}

// Every failure raised by the library. `index` names the offending element
// when one exists; `value` carries a diagnostic magnitude (e.g. the maximum
// deviation from {0,1} for NotBinary).
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what,
        std::optional<std::size_t> index = std::nullopt,
        std::optional<double> value = std::nullopt)
      : std::runtime_error(std::string(to_string(code)) + ": " + what),
        code_(code),
        index_(index),
        value_(value) {}

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> index() const noexcept { return index_; }
  std::optional<double> value() const noexcept { return value_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> index_;
  std::optional<double> value_;
};

}  // namespace cdtopt

#endif  // CDTOPT_ERROR_HPP
