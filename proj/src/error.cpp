#include "odd/error.hpp"

namespace odd {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NonPositiveSpacing: return "NonPositiveSpacing";
    case ErrorCode::SlipInconsistency: return "SlipInconsistency";
    case ErrorCode::NonPositiveMass: return "NonPositiveMass";
    case ErrorCode::SpacingOutOfRange: return "SpacingOutOfRange";
    case ErrorCode::DegenerateRoller: return "DegenerateRoller";
    case ErrorCode::SingularConfiguration: return "SingularConfiguration";
    case ErrorCode::InvalidGeometry: return "InvalidGeometry";
    case ErrorCode::NonPositiveDt: return "NonPositiveDt";
    case ErrorCode::BadWheelIndex: return "BadWheelIndex";
    case ErrorCode::InvalidGains: return "InvalidGains";
    case ErrorCode::ModeMismatch: return "ModeMismatch";
    case ErrorCode::UnknownScript: return "UnknownScript";
    case ErrorCode::EmptyScript: return "EmptyScript";
    case ErrorCode::EmptyLog: return "EmptyLog";
    case ErrorCode::IoFailure: return "IoFailure";
    case ErrorCode::ConfigError: return "ConfigError";
    case ErrorCode::MalformedMessage: return "MalformedMessage";
    case ErrorCode::DriverSlotBusy: return "DriverSlotBusy";
    case ErrorCode::PortUnavailable: return "PortUnavailable";
  }
  return "Unknown";
}

}  // namespace odd
