#include "odd/robot.hpp"

namespace odd {

namespace {

ControllerGains mode_gains(const SimConfig& c) {
  ControllerGains g = c.gains;
  if (c.mode == Mode::Caster) g.k_pf = 0.0;
  return g;
}

SimConfig validated(SimConfig c) {
  c.validate();
  return c;
}

}  // namespace

ClosedLoopRobot::ClosedLoopRobot(SimConfig config, std::optional<RobotState> initial)
    : config_(validated(std::move(config))),
      suite_(mode_gains(config_), config_.geometry.d_min, config_.geometry.d_max),
      state_(initial.value_or(initial_state(config_))),
      rng_(config_.seed) {
  if (!config_.geometry.contains(state_.d)) {
    throw Error(ErrorCode::SpacingOutOfRange, "initial spacing outside the limits");
  }
}

const RobotState& ClosedLoopRobot::tick(const OperatorCommand& cmd) {
  const double dt = config_.dt;
  const SensorFrame frame = sense(state_, config_, rng_);

  double steer = cmd.rate.phi_dot;
  if (cmd.yaw_setpoint) steer += suite_.steering_step(frame, *cmd.yaw_setpoint, dt);
  double d_rate = cmd.rate.d_dot;
  if (cmd.d_setpoint) d_rate += suite_.distance_step(frame, *cmd.d_setpoint, dt);
  const double corr =
      config_.mode == Mode::Balance ? suite_.balancing_step(frame, cmd.rate.x_dot, dt) : 0.0;

  const WheelSpeeds setpoints =
      mix_commands(corr, steer, d_rate, cmd.rate.twist(), config_.geometry, Spacing(state_.d));
  if (config_.wheel_model == WheelModel::Effort) {
    WheelSpeeds effort{};
    for (int i = 0; i < 4; ++i) {
      const auto k = static_cast<std::size_t>(i);
      effort[k] = suite_.motor_step(i + 1, setpoints[k], frame.wheel_speeds_measured[k], dt);
    }
    state_ = step_effort(state_, effort, config_, &events_);
  } else {
    state_ = step(state_, setpoints, config_, &events_);
  }
  return state_;
}

}  // namespace odd
