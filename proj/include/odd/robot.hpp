#pragma once

#include <optional>
#include <random>

#include "odd/simulator.hpp"

namespace odd {

/// Operator input for one control tick. `rate.phi_dot` and `rate.d_dot` are
/// feed-forward; the optional setpoints close the steering and distance
/// loops on top of them.
struct OperatorCommand {
  OddRate rate;
  std::optional<double> yaw_setpoint;
  std::optional<double> d_setpoint;
};

/// The simulated plant with the full control stack in the loop: sense, run
/// the loops, mix, actuate, step.
class ClosedLoopRobot {
 public:
  /// Validates the config; throws SpacingOutOfRange if the start spacing is
  /// outside the limits.
  explicit ClosedLoopRobot(SimConfig config, std::optional<RobotState> initial = std::nullopt);

  const RobotState& tick(const OperatorCommand& cmd);

  const RobotState& state() const noexcept { return state_; }
  const SimConfig& config() const noexcept { return config_; }
  const ControllerSuite& controllers() const noexcept { return suite_; }
  bool spacing_limit_hit() const noexcept { return events_.spacing_limit_hit; }

 private:
  SimConfig config_;
  ControllerSuite suite_;
  RobotState state_;
  std::mt19937_64 rng_;
  StepEvents events_;
};

}  // namespace odd
