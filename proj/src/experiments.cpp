#include "odd/experiments.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <numeric>
#include <sstream>

namespace odd {

namespace {

OddRate lerp(const OddRate& a, const OddRate& b, double s) {
  return {a.x_dot + (b.x_dot - a.x_dot) * s, a.y_dot + (b.y_dot - a.y_dot) * s,
          a.phi_dot + (b.phi_dot - a.phi_dot) * s, a.d_dot + (b.d_dot - a.d_dot) * s};
}

CommandScript four_legs(std::string name, const std::array<OddRate, 4>& legs, double duration) {
  CommandScript s{std::move(name), {}, {}, {}};
  for (const OddRate& leg : legs) s.segments.push_back(ScriptSegment::hold(duration, leg));
  return s;
}

// Trapezoidal d_dot profile: grow from d_low to d_high, then shrink back,
// with `base` held throughout.
CommandScript d_sweep(std::string name, OddRate base, const ScriptParams& p) {
  const double travel = p.d_high - p.d_low;
  const double hold = travel / p.d_rate - p.d_ramp;
  if (!(hold >= 0.0)) {
    throw Error(ErrorCode::ConfigError, "d sweep too short for its ramps");
  }
  auto with_ddot = [base](double dd) {
    OddRate r = base;
    r.d_dot = dd;
    return r;
  };
  CommandScript s{std::move(name), {}, p.d_low, {}};
  for (double sign : {1.0, -1.0}) {
    const OddRate peak = with_ddot(sign * p.d_rate);
    s.segments.push_back(ScriptSegment::ramp(p.d_ramp, with_ddot(0.0), peak));
    if (hold > 0.0) s.segments.push_back(ScriptSegment::hold(hold, peak));
    s.segments.push_back(ScriptSegment::ramp(p.d_ramp, peak, with_ddot(0.0)));
  }
  // Feed-forward alone drifts when the wheels lag a rotating base; the
  // distance loop pulls d back onto its starting value.
  ScriptSegment rest = ScriptSegment::hold(p.d_return, OddRate{});
  rest.d_setpoint = p.d_low;
  s.segments.push_back(rest);
  return s;
}

std::size_t tick_count(double duration, double dt) {
  return static_cast<std::size_t>(std::llround(duration / dt));
}

}  // namespace

double CommandScript::duration() const noexcept {
  return std::accumulate(segments.begin(), segments.end(), 0.0,
                         [](double acc, const ScriptSegment& s) { return acc + s.duration; });
}

CommandScript builtin_script(std::string_view name, const ScriptParams& p) {
  const double v = p.speed;
  const double leg_time = p.leg / v;
  if (name == "square") {
    return four_legs("square", {OddRate{v, 0, 0, 0}, {0, v, 0, 0}, {-v, 0, 0, 0}, {0, -v, 0, 0}},
                     leg_time);
  }
  if (name == "rhombus") {
    const double c = v / std::sqrt(2.0);
    return four_legs("rhombus", {OddRate{c, c, 0, 0}, {-c, c, 0, 0}, {-c, -c, 0, 0}, {c, -c, 0, 0}},
                     leg_time);
  }
  const double loop_time = 2.0 * std::numbers::pi / p.turn_rate;
  if (name == "circle_xz") {
    return {"circle_xz", {ScriptSegment::hold(loop_time, {v, 0, p.turn_rate, 0})}, {}, {}};
  }
  if (name == "circle_yz") {
    return {"circle_yz", {ScriptSegment::hold(loop_time, {0, v, p.turn_rate, 0})}, {}, {}};
  }
  if (name == "d_sweep_x") return d_sweep("d_sweep_x", {v, 0, 0, 0}, p);
  if (name == "d_sweep_y") return d_sweep("d_sweep_y", {0, v, 0, 0}, p);
  if (name == "d_sweep_spin") return d_sweep("d_sweep_spin", {0, 0, p.turn_rate, 0}, p);
  throw Error(ErrorCode::UnknownScript, "unknown script '" + std::string(name) + "'");
}

TrajectoryLog run_script(const CommandScript& script, const SimConfig& base_config,
                         std::optional<RobotState> initial) {
  if (script.segments.empty()) {
    throw Error(ErrorCode::EmptyScript, "script '" + script.name + "' has no segments");
  }
  for (const ScriptSegment& seg : script.segments) {
    if (!(seg.duration > 0.0) || !std::isfinite(seg.duration)) {
      throw Error(ErrorCode::ConfigError, "script segment durations must be positive");
    }
  }
  SimConfig config = base_config;
  if (script.mode) config.mode = *script.mode;
  if (script.initial_d) config.d_initial = *script.initial_d;
  RobotState start = initial.value_or(initial_state(config));
  if (script.initial_d) start.d = *script.initial_d;
  ClosedLoopRobot robot(config, start);

  TrajectoryLog log;
  log.rows.reserve(tick_count(script.duration() + config.settle_time, config.dt) +
                   script.segments.size());

  auto tick = [&](const OddRate& cmd, const std::optional<double>& yaw_sp,
                  const std::optional<double>& d_sp) {
    const RobotState& state = robot.tick({cmd, yaw_sp, d_sp});
    log.rows.push_back(LogRow{state.t, state.x, state.y, state.phi, state.d, state.pitch,
                              state.rate, state.wheel_speeds, cmd});
  };

  for (const ScriptSegment& seg : script.segments) {
    const std::size_t n = std::max<std::size_t>(1, tick_count(seg.duration, config.dt));
    for (std::size_t k = 0; k < n; ++k) {
      const double s = static_cast<double>(k) / static_cast<double>(n);
      tick(lerp(seg.start, seg.end, s), seg.yaw_setpoint, seg.d_setpoint);
    }
  }
  // The settle tail keeps any setpoints of the final segment engaged.
  const ScriptSegment& last = script.segments.back();
  const std::size_t settle = tick_count(config.settle_time, config.dt);
  for (std::size_t k = 0; k < settle; ++k) tick(OddRate{}, last.yaw_setpoint, last.d_setpoint);
  return log;
}

RunMetrics compute_metrics(const TrajectoryLog& log) {
  if (log.rows.empty()) throw Error(ErrorCode::EmptyLog, "trajectory log has no rows");
  const LogRow& first = log.rows.front();
  const LogRow& last = log.rows.back();
  auto dist_to_start = [&first](const LogRow& r) { return std::hypot(r.x - first.x, r.y - first.y); };

  RunMetrics m;
  m.endpoint_deviation = dist_to_start(last);

  const std::size_t n = log.rows.size();
  const std::size_t tail_begin = n - (n + 3) / 4;
  m.loop_deviation = dist_to_start(log.rows[tail_begin]);
  for (std::size_t i = tail_begin; i < n; ++i) m.loop_deviation = std::min(m.loop_deviation, dist_to_start(log.rows[i]));

  // The first row already includes one step of motion; its interval is
  // integrated from the logged rate.
  const double first_dt = n > 1 ? log.rows[1].t - first.t : first.t;
  double realized = first.rate.phi_dot * first_dt;
  double commanded = first.cmd.phi_dot * first_dt;
  for (std::size_t i = 1; i < n; ++i) {
    const LogRow& a = log.rows[i - 1];
    const LogRow& b = log.rows[i];
    realized += wrap_angle(b.phi - a.phi);
    commanded += b.cmd.phi_dot * (b.t - a.t);
    m.path_length += std::hypot(b.x - a.x, b.y - a.y);
  }
  m.heading_drift = std::abs(realized - commanded);
  return m;
}

std::string format_log(const TrajectoryLog& log) {
  std::string out(kLogHeader);
  out += '\n';
  char buf[32];
  for (const LogRow& r : log.rows) {
    const double values[] = {r.t,
                             r.x,
                             r.y,
                             r.phi,
                             r.d,
                             r.pitch,
                             r.rate.x_dot,
                             r.rate.y_dot,
                             r.rate.phi_dot,
                             r.rate.d_dot,
                             r.wheel_speeds[0],
                             r.wheel_speeds[1],
                             r.wheel_speeds[2],
                             r.wheel_speeds[3],
                             r.cmd.x_dot,
                             r.cmd.y_dot,
                             r.cmd.phi_dot,
                             r.cmd.d_dot};
    bool first = true;
    for (double v : values) {
      if (!first) out += ',';
      first = false;
      const auto res = std::to_chars(buf, buf + sizeof buf, v);
      out.append(buf, res.ptr);
    }
    out += '\n';
  }
  return out;
}

TrajectoryLog parse_log(std::string_view text) {
  auto next_line = [&text]() {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };
  if (next_line() != kLogHeader) {
    throw Error(ErrorCode::IoFailure, "log header does not match the trajectory schema");
  }
  TrajectoryLog log;
  std::size_t line_no = 1;
  while (!text.empty()) {
    const std::string_view line = next_line();
    ++line_no;
    if (line.empty()) continue;
    std::array<double, 18> v{};
    const char* p = line.data();
    const char* end = line.data() + line.size();
    for (std::size_t i = 0; i < v.size(); ++i) {
      const auto res = std::from_chars(p, end, v[i]);
      const bool last = i + 1 == v.size();
      if (res.ec != std::errc{} || (last ? res.ptr != end : (res.ptr == end || *res.ptr != ','))) {
        throw Error(ErrorCode::IoFailure, "malformed log row at line " + std::to_string(line_no));
      }
      p = res.ptr + 1;
    }
    log.rows.push_back(LogRow{v[0], v[1], v[2], v[3], v[4], v[5],
                              OddRate{v[6], v[7], v[8], v[9]},
                              WheelSpeeds{v[10], v[11], v[12], v[13]},
                              OddRate{v[14], v[15], v[16], v[17]}});
  }
  return log;
}

void export_log(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::IoFailure, "cannot write " + path);
  out << format_log(log);
  if (!out) throw Error(ErrorCode::IoFailure, "write failed for " + path);
}

TrajectoryLog import_log(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_log(buffer.str());
}

}  // namespace odd
