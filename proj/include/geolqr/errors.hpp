#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace geolqr {

enum class ErrorKind {
  AngleNearPi,
  NotControllable,
  NoStabilizingSolution,
  StepTooLarge,
  NumericalDivergence,
  ObstacleContact,
  NoConvergence,
  NoDescent,
  ParseError,
  ValidationError,
  InvalidArgument,
};

constexpr std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::AngleNearPi: return "AngleNearPi";
    case ErrorKind::NotControllable: return "NotControllable";
    case ErrorKind::NoStabilizingSolution: return "NoStabilizingSolution";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::NumericalDivergence: return "NumericalDivergence";
    case ErrorKind::ObstacleContact: return "ObstacleContact";
    case ErrorKind::NoConvergence: return "NoConvergence";
    case ErrorKind::NoDescent: return "NoDescent";
    case ErrorKind::ParseError: return "ParseError";
    case ErrorKind::ValidationError: return "ValidationError";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

/// Every failure raised by the library. `field()` carries a config path
/// (e.g. "initial.rotation") for ParseError/ValidationError, empty otherwise.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message, std::string field = {})
      : std::runtime_error(std::string(to_string(kind)) + ": " + message),
        kind_(kind),
        field_(std::move(field)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& field() const noexcept { return field_; }

  /// True for failures caused by the input description rather than numerics.
  bool is_config_error() const noexcept {
    return kind_ == ErrorKind::ParseError || kind_ == ErrorKind::ValidationError;
  }

 private:
  ErrorKind kind_;
  std::string field_;
};

}  // namespace geolqr
