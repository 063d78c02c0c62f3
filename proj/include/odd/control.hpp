#pragma once

#include <array>

#include "odd/drive_models.hpp"
#include "odd/mecanum_rig.hpp"

namespace odd {

struct PidGains {
  double kp = 0.0;
  double ki = 0.0;
  double kd = 0.0;
  double output_min = -1e9;
  double output_max = 1e9;
  double integral_limit = 1e9;

  /// Throws InvalidGains.
  void validate() const;
};

struct PidMemory {
  double integral_accum = 0.0;
  double prev_error = 0.0;
  bool initialized = false;

  void reset() noexcept { *this = PidMemory{}; }
};

/// Positional PID with integral clamp, conditional integration while the
/// output is saturated, and a backward-difference derivative that is zero on
/// the first sample.
double pid_step(const PidGains& gains, PidMemory& memory, double error, double dt);

struct SensorFrame {
  double t = 0.0;
  double pitch = 0.0;       ///< [rad], positive when the mass leans toward +B_x
  double pitch_rate = 0.0;  ///< [rad/s]
  double yaw = 0.0;
  double yaw_rate = 0.0;
  double d_measured = 0.0;  ///< draw-wire length [m]
  double d_rate = 0.0;
  WheelSpeeds wheel_speeds_measured{};
  std::array<double, 2> accel_body{};
  double velocity_x = 0.0;  ///< odometric B_x speed from the encoders [m/s]
};

struct ControllerGains {
  PidGains pitch;         ///< PD on pitch; derivative taken from the IMU rate
  PidGains velocity;      ///< PI on B_x velocity error
  double k_pf = 0.0;      ///< positive velocity feedback
  double balance_limit = 2.0;
  PidGains yaw;           ///< PD on wrapped yaw error; derivative from the IMU rate
  PidGains spacing;       ///< outer PD: d error -> d_dot setpoint
  PidGains spacing_rate;  ///< inner PI: d_dot error -> d_dot command
  PidGains motor;         ///< PI per wheel, output in [-1, 1]
  double rate_hz = 200.0;

  void validate() const;
};

/// Defaults tuned on the nominal simulated plant (caster and balance modes).
ControllerGains default_gains();

/// Wraps an angle to (-pi, pi].
double wrap_angle(double a) noexcept;

/// The four loops together with their persistent state. One stepping agent
/// owns a suite; outputs depend only on the gains and the input sequence.
class ControllerSuite {
 public:
  explicit ControllerSuite(ControllerGains gains, double d_min = 0.0, double d_max = 1e9);

  double balancing_step(const SensorFrame& sensors, double velocity_setpoint, double dt);
  double steering_step(const SensorFrame& sensors, double yaw_setpoint, double dt);
  double distance_step(const SensorFrame& sensors, double d_setpoint, double dt);
  double motor_step(int wheel_index, double speed_setpoint, double speed_measured, double dt);

  void reset() noexcept;

  const ControllerGains& gains() const noexcept { return gains_; }
  const PidMemory& velocity_memory() const noexcept { return velocity_; }
  const PidMemory& spacing_rate_memory() const noexcept { return spacing_rate_; }
  const PidMemory& motor_memory(int wheel_index) const;

 private:
  ControllerGains gains_;
  double d_min_;
  double d_max_;
  PidMemory velocity_;
  PidMemory spacing_;
  PidMemory spacing_rate_;
  std::array<PidMemory, 4> motor_{};
};

/// Combines the loop outputs with the operator twist into per-wheel speed
/// setpoints. The operator yaw rate is not used directly; it reaches the
/// wheels through `steer_cmd`.
WheelSpeeds mix_commands(double balance_corr, double steer_cmd, double d_rate_cmd,
                         const BodyTwist& operator_twist, const RigGeometry& geom, Spacing d);

}  // namespace odd
