#include "odd/wire.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace odd {

using nlohmann::json;

namespace {

[[noreturn]] void malformed(const std::string& why) {
  throw Error(ErrorCode::MalformedMessage, why);
}

json parse_object(std::string_view text, ErrorCode code) {
  json j = json::parse(text.begin(), text.end(), nullptr, false);
  if (j.is_discarded() || !j.is_object()) {
    throw Error(code, "expected a JSON object");
  }
  return j;
}

double number_field(const json& j, const char* key, ErrorCode code) {
  const auto it = j.find(key);
  if (it == j.end() || !it->is_number()) {
    throw Error(code, std::string("field '") + key + "' must be a number");
  }
  const double v = it->get<double>();
  if (!std::isfinite(v)) throw Error(code, std::string("field '") + key + "' must be finite");
  return v;
}

double number_or(const json& j, const char* key, double fallback, ErrorCode code) {
  return j.contains(key) ? number_field(j, key, code) : fallback;
}

void expect_type(const json& j, std::string_view type) {
  const auto it = j.find("type");
  if (it == j.end() || !it->is_string() || it->get<std::string>() != type) {
    malformed("expected type \"" + std::string(type) + "\"");
  }
}

}  // namespace

CommandMessage parse_command(std::string_view text) {
  const json j = parse_object(text, ErrorCode::MalformedMessage);
  expect_type(j, "cmd");
  CommandMessage m;
  m.vx = number_field(j, "vx", ErrorCode::MalformedMessage);
  m.vy = number_field(j, "vy", ErrorCode::MalformedMessage);
  m.wz = number_field(j, "wz", ErrorCode::MalformedMessage);
  m.ddot = number_field(j, "ddot", ErrorCode::MalformedMessage);
  const auto seq = j.find("seq");
  if (seq == j.end() || !seq->is_number_integer()) malformed("field 'seq' must be an integer");
  m.seq = seq->get<std::int64_t>();
  if (const auto sp = j.find("d_setpoint"); sp != j.end() && !sp->is_null()) {
    m.d_setpoint = number_field(j, "d_setpoint", ErrorCode::MalformedMessage);
  }
  return m;
}

std::string format_command(const CommandMessage& m) {
  json j{{"type", "cmd"}, {"vx", m.vx}, {"vy", m.vy}, {"wz", m.wz}, {"ddot", m.ddot}, {"seq", m.seq}};
  if (m.d_setpoint) j["d_setpoint"] = *m.d_setpoint;
  return j.dump();
}

std::string format_state(const StateMessage& s) {
  return json{{"type", "state"}, {"t", s.t},   {"x", s.x},   {"y", s.y},       {"phi", s.phi},
              {"d", s.d},        {"pitch", s.pitch}, {"vx", s.vx}, {"vy", s.vy}, {"wz", s.wz},
              {"ddot", s.ddot},  {"course", s.course}}
      .dump();
}

StateMessage parse_state(std::string_view text) {
  const json j = parse_object(text, ErrorCode::MalformedMessage);
  expect_type(j, "state");
  constexpr auto code = ErrorCode::MalformedMessage;
  StateMessage s;
  s.t = number_field(j, "t", code);
  s.x = number_field(j, "x", code);
  s.y = number_field(j, "y", code);
  s.phi = number_field(j, "phi", code);
  s.d = number_field(j, "d", code);
  s.pitch = number_field(j, "pitch", code);
  s.vx = number_field(j, "vx", code);
  s.vy = number_field(j, "vy", code);
  s.wz = number_field(j, "wz", code);
  s.ddot = number_field(j, "ddot", code);
  if (const auto c = j.find("course"); c != j.end() && c->is_string()) s.course = c->get<std::string>();
  return s;
}

std::string format_error(ErrorCode code, std::string_view message) {
  return json{{"type", "error"}, {"code", to_string(code)}, {"message", message}}.dump();
}

CommandMessage clamp_command(CommandMessage m, const CommandLimits& limits, const RigGeometry& geom) {
  m.vx = std::clamp(m.vx, -limits.vx, limits.vx);
  m.vy = std::clamp(m.vy, -limits.vy, limits.vy);
  m.wz = std::clamp(m.wz, -limits.wz, limits.wz);
  m.ddot = std::clamp(m.ddot, -limits.ddot, limits.ddot);
  if (m.d_setpoint) m.d_setpoint = std::clamp(*m.d_setpoint, geom.d_min, geom.d_max);
  return m;
}

Course parse_course(std::string_view text) {
  constexpr auto code = ErrorCode::ConfigError;
  const json j = parse_object(text, code);
  Course c;
  if (const auto id = j.find("id"); id != j.end()) {
    if (!id->is_string()) throw Error(code, "course id must be a string");
    c.id = id->get<std::string>();
  }
  if (const auto sp = j.find("spawn"); sp != j.end()) {
    if (!sp->is_object()) throw Error(code, "spawn must be an object");
    if (const auto n = sp->find("name"); n != sp->end() && n->is_string()) c.spawn.name = n->get<std::string>();
    c.spawn.x = number_or(*sp, "x", 0.0, code);
    c.spawn.y = number_or(*sp, "y", 0.0, code);
    c.spawn.phi = number_or(*sp, "phi", 0.0, code);
    if (sp->contains("d")) c.spawn.d = number_field(*sp, "d", code);
  }
  if (const auto obs = j.find("obstacles"); obs != j.end()) {
    if (!obs->is_array()) throw Error(code, "obstacles must be an array");
    for (const json& o : *obs) {
      if (!o.is_object()) throw Error(code, "each obstacle must be an object");
      Obstacle r{number_field(o, "x", code), number_field(o, "y", code), number_or(o, "phi", 0.0, code),
                 number_field(o, "width", code), number_field(o, "height", code)};
      if (!(r.width > 0.0) || !(r.height > 0.0)) throw Error(code, "obstacle sizes must be positive");
      c.obstacles.push_back(r);
    }
  }
  return c;
}

Course load_course(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open course file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_course(buffer.str());
}

std::string format_course(const Course& c) {
  json obstacles = json::array();
  for (const Obstacle& o : c.obstacles) {
    obstacles.push_back({{"x", o.x}, {"y", o.y}, {"phi", o.phi}, {"width", o.width}, {"height", o.height}});
  }
  json spawn{{"name", c.spawn.name}, {"x", c.spawn.x}, {"y", c.spawn.y}, {"phi", c.spawn.phi}};
  if (c.spawn.d) spawn["d"] = *c.spawn.d;
  return json{{"id", c.id}, {"spawn", spawn}, {"obstacles", obstacles}}.dump();
}

}  // namespace odd
