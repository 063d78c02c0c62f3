#include "odd/control.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace odd {

namespace {

void require_positive_dt(double dt) {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::NonPositiveDt, "time step must be positive, got " + std::to_string(dt));
  }
}

}  // namespace

void PidGains::validate() const {
  if (!std::isfinite(kp) || !std::isfinite(ki) || !std::isfinite(kd)) {
    throw Error(ErrorCode::InvalidGains, "gains must be finite");
  }
  if (!(output_min < output_max)) {
    throw Error(ErrorCode::InvalidGains, "output_min must be below output_max");
  }
  if (!(integral_limit >= 0.0)) {
    throw Error(ErrorCode::InvalidGains, "integral_limit must be non-negative");
  }
}

double pid_step(const PidGains& gains, PidMemory& memory, double error, double dt) {
  require_positive_dt(dt);

  const double derivative = memory.initialized ? (error - memory.prev_error) / dt : 0.0;
  const double proportional = gains.kp * error;
  const double candidate = std::clamp(memory.integral_accum + error * dt, -gains.integral_limit,
                                      gains.integral_limit);

  double raw = proportional + gains.ki * candidate + gains.kd * derivative;
  // Conditional integration: freeze the integrator while the output is pinned
  // and the integral term is pushing further into the limit.
  const double push = gains.ki * (candidate - memory.integral_accum);
  if ((raw > gains.output_max && push > 0.0) || (raw < gains.output_min && push < 0.0)) {
    raw = proportional + gains.ki * memory.integral_accum + gains.kd * derivative;
  } else {
    memory.integral_accum = candidate;
  }

  memory.prev_error = error;
  memory.initialized = true;
  return std::clamp(raw, gains.output_min, gains.output_max);
}

void ControllerGains::validate() const {
  for (const PidGains* g : {&pitch, &velocity, &yaw, &spacing, &spacing_rate, &motor}) {
    g->validate();
  }
  if (!(balance_limit > 0.0)) {
    throw Error(ErrorCode::InvalidGains, "balance_limit must be positive");
  }
  if (!(rate_hz > 0.0)) {
    throw Error(ErrorCode::InvalidGains, "controller rate must be positive");
  }
}

ControllerGains default_gains() {
  ControllerGains g;
  g.pitch = {.kp = 4.0, .ki = 0.0, .kd = 0.6, .output_min = -2.0, .output_max = 2.0};
  // Velocity gains are negative: a balancing base has to roll away from its
  // target briefly to lean toward it.
  g.velocity = {.kp = -1.5, .ki = -3.0, .kd = 0.0, .output_min = -1.0, .output_max = 1.0,
                .integral_limit = 1.0};
  g.k_pf = 0.9;
  g.balance_limit = 2.0;
  g.yaw = {.kp = 3.0, .ki = 0.0, .kd = 0.2, .output_min = -std::numbers::pi,
           .output_max = std::numbers::pi};
  g.spacing = {.kp = 4.0, .ki = 0.0, .kd = 0.0, .output_min = -0.3, .output_max = 0.3};
  g.spacing_rate = {.kp = 1.0, .ki = 10.0, .kd = 0.0, .output_min = -0.5, .output_max = 0.5,
                    .integral_limit = 0.05};
  g.motor = {.kp = 0.05, .ki = 0.5, .kd = 0.0, .output_min = -1.0, .output_max = 1.0,
             .integral_limit = 2.0};
  g.rate_hz = 200.0;
  return g;
}

double wrap_angle(double a) noexcept {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  double wrapped = std::remainder(a, two_pi);  // [-pi, pi]
  if (wrapped <= -std::numbers::pi) wrapped += two_pi;
  return wrapped;
}

ControllerSuite::ControllerSuite(ControllerGains gains, double d_min, double d_max)
    : gains_(gains), d_min_(d_min), d_max_(d_max) {
  gains_.validate();
}

double ControllerSuite::balancing_step(const SensorFrame& s, double velocity_setpoint, double dt) {
  require_positive_dt(dt);
  const double tilt = gains_.pitch.kp * s.pitch + gains_.pitch.kd * s.pitch_rate;
  const double cruise = pid_step(gains_.velocity, velocity_, velocity_setpoint - s.velocity_x, dt);
  const double boost = gains_.k_pf * s.velocity_x;
  return std::clamp(std::clamp(tilt, gains_.pitch.output_min, gains_.pitch.output_max) + cruise +
                        boost,
                    -gains_.balance_limit, gains_.balance_limit);
}

double ControllerSuite::steering_step(const SensorFrame& s, double yaw_setpoint, double dt) {
  require_positive_dt(dt);
  const double error = wrap_angle(yaw_setpoint - s.yaw);
  const double cmd = gains_.yaw.kp * error - gains_.yaw.kd * s.yaw_rate;
  return std::clamp(cmd, gains_.yaw.output_min, gains_.yaw.output_max);
}

double ControllerSuite::distance_step(const SensorFrame& s, double d_setpoint, double dt) {
  const double rate_setpoint = pid_step(gains_.spacing, spacing_, d_setpoint - s.d_measured, dt);
  double cmd = pid_step(gains_.spacing_rate, spacing_rate_, rate_setpoint - s.d_rate, dt);
  if ((s.d_measured >= d_max_ && cmd > 0.0) || (s.d_measured <= d_min_ && cmd < 0.0)) {
    cmd = 0.0;
  }
  return cmd;
}

double ControllerSuite::motor_step(int wheel_index, double speed_setpoint, double speed_measured,
                                   double dt) {
  if (wheel_index < 1 || wheel_index > 4) {
    throw Error(ErrorCode::BadWheelIndex,
                "wheel index must be in 1..4, got " + std::to_string(wheel_index));
  }
  const double effort = pid_step(gains_.motor, motor_[static_cast<std::size_t>(wheel_index - 1)],
                                 speed_setpoint - speed_measured, dt);
  return std::clamp(effort, -1.0, 1.0);
}

const PidMemory& ControllerSuite::motor_memory(int wheel_index) const {
  if (wheel_index < 1 || wheel_index > 4) {
    throw Error(ErrorCode::BadWheelIndex,
                "wheel index must be in 1..4, got " + std::to_string(wheel_index));
  }
  return motor_[static_cast<std::size_t>(wheel_index - 1)];
}

void ControllerSuite::reset() noexcept {
  velocity_.reset();
  spacing_.reset();
  spacing_rate_.reset();
  for (auto& m : motor_) m.reset();
}

WheelSpeeds mix_commands(double balance_corr, double steer_cmd, double d_rate_cmd,
                         const BodyTwist& operator_twist, const RigGeometry& geom, Spacing d) {
  if (!(std::abs(singularity_metric(geom, d)) >= kSingularEps)) {
    throw Error(ErrorCode::SingularConfiguration, "mixer asked to drive a singular rig");
  }
  const OddRate rate{operator_twist.x_dot + balance_corr, operator_twist.y_dot, steer_cmd,
                     d_rate_cmd};
  return inverse_kinematics(geom, d, rate);
}

}  // namespace odd
