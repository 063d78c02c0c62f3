#pragma once

#include <random>
#include <utility>

#include "odd/config.hpp"

namespace odd {

inline constexpr double kGravity = 9.81;

struct RobotState {
  double x = 0.0;    ///< world position [m]
  double y = 0.0;
  double phi = 0.0;  ///< heading, wrapped to (-pi, pi]
  double d = 0.4;
  OddRate rate;      ///< body frame
  double pitch = 0.0;
  double pitch_rate = 0.0;
  WheelSpeeds wheel_angles{};
  WheelSpeeds wheel_speeds{};
  std::array<double, 2> accel_body{};
  double t = 0.0;
};

struct StepEvents {
  bool spacing_limit_hit = false;
};

RobotState initial_state(const SimConfig& config);

/// Masses in effect at time t, after any active mass-asymmetry disturbance.
MassPair effective_masses(const SimConfig& config, double t);

/// External body-frame forces on each group (ground slope and pushes), zero
/// when no such disturbance is active.
WheelGroupForces external_group_forces(const SimConfig& config, const RobotState& state,
                                       const MassPair& masses);

/// Advances the plant by config.dt with the wheels tracking `wheel_setpoints`
/// through a first-order lag.
RobotState step(const RobotState& state, const WheelSpeeds& wheel_setpoints,
                const SimConfig& config, StepEvents* events = nullptr);

/// Same, but the wheels are driven by normalized efforts in [-1, 1]
/// (wheel_model = effort).
RobotState step_effort(const RobotState& state, const WheelSpeeds& efforts,
                       const SimConfig& config, StepEvents* events = nullptr);

SensorFrame sense(const RobotState& state, const SimConfig& config, std::mt19937_64& rng);

/// Point-mass inverted pendulum at config.com_height, integrated over one dt.
/// Returns the new (pitch, pitch_rate). Throws ModeMismatch in caster mode.
std::pair<double, double> apply_pitch_dynamics(const RobotState& state, double x_accel_cmd,
                                               const SimConfig& config);

}  // namespace odd
