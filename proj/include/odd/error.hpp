#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace odd {

enum class ErrorCode {
  NonPositiveSpacing,
  SlipInconsistency,
  NonPositiveMass,
  SpacingOutOfRange,
  DegenerateRoller,
  SingularConfiguration,
  InvalidGeometry,
  NonPositiveDt,
  BadWheelIndex,
  InvalidGains,
  ModeMismatch,
  UnknownScript,
  EmptyScript,
  EmptyLog,
  IoFailure,
  ConfigError,
  MalformedMessage,
  DriverSlotBusy,
  PortUnavailable,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library carries a stable code so that the CLI
/// and the service can report it in machine-readable form.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace odd
