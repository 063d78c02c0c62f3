#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odd/robot.hpp"

namespace odd {

/// Operator commands are ramped linearly from `start` to `end` over the
/// segment. Optional setpoints engage the steering / distance loops on top
/// of the feed-forward rate.
struct ScriptSegment {
  double duration = 0.0;
  OddRate start;
  OddRate end;
  std::optional<double> yaw_setpoint;
  std::optional<double> d_setpoint;

  static ScriptSegment hold(double duration, OddRate rate) { return {duration, rate, rate, {}, {}}; }
  static ScriptSegment ramp(double duration, OddRate from, OddRate to) {
    return {duration, from, to, {}, {}};
  }
};

struct CommandScript {
  std::string name;
  std::vector<ScriptSegment> segments;
  std::optional<double> initial_d;
  std::optional<Mode> mode;

  double duration() const noexcept;
};

/// Magnitudes used by the builtin scripts.
struct ScriptParams {
  double speed = 0.5;                       ///< [m/s]
  double turn_rate = 0.6283185307179586;    ///< pi/5 [rad/s]
  double leg = 1.0;                         ///< [m]
  double d_low = 0.3;
  double d_high = 0.7;
  double d_rate = 0.2;                      ///< peak d_dot of the sweep [m/s]
  double d_ramp = 0.5;                      ///< [s]
  double d_return = 2.0;                    ///< closed-loop hold on the start spacing [s]
};

inline constexpr std::string_view kBuiltinScripts[] = {
    "square", "rhombus", "circle_xz", "circle_yz", "d_sweep_x", "d_sweep_y", "d_sweep_spin"};

/// Throws UnknownScript.
CommandScript builtin_script(std::string_view name, const ScriptParams& params = {});

struct LogRow {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
  double d = 0.0;
  double pitch = 0.0;
  OddRate rate;
  WheelSpeeds wheel_speeds{};
  OddRate cmd;

  bool operator==(const LogRow&) const = default;
};

struct TrajectoryLog {
  std::vector<LogRow> rows;

  bool operator==(const TrajectoryLog&) const = default;
};

inline constexpr std::string_view kLogHeader =
    "t,x,y,phi,d,pitch,vx,vy,wz,ddot,th1,th2,th3,th4,cmd_vx,cmd_vy,cmd_wz,cmd_ddot";

/// Steps the simulator with the control stack in the loop, one row per
/// step, then `config.settle_time` of zero command. `initial` overrides the
/// starting state (the script's initial_d still applies if set).
TrajectoryLog run_script(const CommandScript& script, const SimConfig& config,
                         std::optional<RobotState> initial = std::nullopt);

struct RunMetrics {
  double endpoint_deviation = 0.0;
  double loop_deviation = 0.0;  ///< closest approach to start over the last quarter
  double heading_drift = 0.0;   ///< |realized - commanded| heading change
  double path_length = 0.0;
};

/// Throws EmptyLog.
RunMetrics compute_metrics(const TrajectoryLog& log);

std::string format_log(const TrajectoryLog& log);
/// Throws IoFailure on a malformed document.
TrajectoryLog parse_log(std::string_view text);

void export_log(const TrajectoryLog& log, const std::string& path);
TrajectoryLog import_log(const std::string& path);

}  // namespace odd
