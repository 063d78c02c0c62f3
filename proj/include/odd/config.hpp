#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

#include "odd/control.hpp"
#include "odd/dynamics.hpp"
#include "odd/mecanum_rig.hpp"

namespace odd {

enum class Mode { Caster, Balance };
enum class PlantModel { Speed, Force };
enum class WheelModel { Lag, Effort };

std::string_view to_string(Mode m) noexcept;
Mode parse_mode(std::string_view s);

enum class DisturbanceKind { Incline, MassAsymmetry, LateralPush };

/// A time-windowed perturbation of the plant.
///  - Incline: extra ground slope of `magnitude` rad, uphill toward world
///    azimuth `direction`.
///  - MassAsymmetry: fraction a; left group scaled by (1 + a/2), right by
///    (1 - a/2).
///  - LateralPush: world-frame force of `magnitude` N along `direction`,
///    shared equally by the two groups.
struct Disturbance {
  DisturbanceKind kind = DisturbanceKind::Incline;
  double magnitude = 0.0;
  double t_start = 0.0;
  double t_end = std::numeric_limits<double>::infinity();
  double direction = 0.0;

  bool active_at(double t) const noexcept {
    return magnitude != 0.0 && t >= t_start && t < t_end;
  }
};

struct SensorNoise {
  double pitch = 0.0;
  double pitch_rate = 0.0;
  double yaw = 0.0;
  double yaw_rate = 0.0;
  double d_relative = 0.0;  ///< draw-wire, relative std (0.001 on the prototype)
  double d_rate = 0.0;
  double accel = 0.0;
  double encoder_quantum = 0.0;  ///< wheel speed quantization step [rad/s]
};

/// Magnitude limits applied to operator commands.
struct CommandLimits {
  double vx = 1.0;
  double vy = 1.0;
  double wz = 2.0;
  double ddot = 0.3;
};

struct SimConfig {
  double dt = 0.005;
  Mode mode = Mode::Caster;
  PlantModel plant = PlantModel::Speed;
  WheelModel wheel_model = WheelModel::Lag;
  RigGeometry geometry;
  double d_initial = 0.4;
  double mass_left = 5.0;
  double mass_right = 5.0;
  double com_height = 0.3;  ///< pendulum stand-in for the balance plant
  /// Ground slope angles [rad]; component i is the rise along world axis i.
  std::array<double, 2> ground_incline{0.0, 0.0};
  SensorNoise noise;
  double wheel_speed_tracking_tau = 0.02;
  double wheel_accel_max = 400.0;  ///< [rad/s^2] at full effort
  /// Ground slip under load: slip speed per unit of (tangential / normal) force.
  double slip_compliance = 0.03;
  /// Softening of the contact across the roller axis while the roller turns.
  double roller_slip_gain = 3.0;
  double rolling_resistance = 0.0;  ///< coefficient, per wheel, along B_x
  double rolling_speed_scale = 0.5;  ///< [rad/s] smoothing of the rolling direction
  std::uint64_t seed = 1;
  double settle_time = 0.5;  ///< zero-command tail appended to scripted runs
  ControllerGains gains = default_gains();
  CommandLimits limits;
  std::vector<Disturbance> disturbances;

  /// Throws ConfigError / InvalidGeometry / InvalidGains.
  void validate() const;
  MassPair nominal_masses() const { return MassPair(mass_left, mass_right); }
};

/// Applies one `key = value` entry. Throws ConfigError on unknown keys or
/// unparsable values.
void apply_config_entry(SimConfig& config, std::string_view key, std::string_view value);

/// Parses the flat key-value format: one `key = value` per line, `#` starts a
/// comment, `disturbance` may repeat.
SimConfig parse_config(std::string_view text);
SimConfig load_config(const std::string& path);

}  // namespace odd
