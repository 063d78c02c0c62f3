#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "odd/config.hpp"

namespace odd {

/// Operator command, `{"type":"cmd", ...}` on the wire.
struct CommandMessage {
  double vx = 0.0;
  double vy = 0.0;
  double wz = 0.0;
  double ddot = 0.0;
  std::int64_t seq = 0;
  std::optional<double> d_setpoint;
};

/// Broadcast snapshot, `{"type":"state", ...}` on the wire.
struct StateMessage {
  double t = 0.0;
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
  double d = 0.0;
  double pitch = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double wz = 0.0;
  double ddot = 0.0;
  std::string course;
};

/// Throws MalformedMessage. Unknown fields are ignored.
CommandMessage parse_command(std::string_view text);
std::string format_command(const CommandMessage& msg);

std::string format_state(const StateMessage& msg);
/// Throws MalformedMessage.
StateMessage parse_state(std::string_view text);

std::string format_error(ErrorCode code, std::string_view message);

/// Magnitude clamp against the configured limits; d_setpoint is held inside
/// the spacing range.
CommandMessage clamp_command(CommandMessage msg, const CommandLimits& limits,
                             const RigGeometry& geom);

struct Obstacle {
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
  double width = 0.0;   ///< extent along the rectangle's own x axis [m]
  double height = 0.0;  ///< extent along its y axis [m]
};

struct SpawnPose {
  std::string name = "start";
  double x = 0.0;
  double y = 0.0;
  double phi = 0.0;
  std::optional<double> d;
};

struct Course {
  std::string id = "empty";
  SpawnPose spawn;
  std::vector<Obstacle> obstacles;
};

/// Throws ConfigError.
Course parse_course(std::string_view text);
Course load_course(const std::string& path);
std::string format_course(const Course& course);

}  // namespace odd
