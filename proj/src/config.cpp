#include "odd/config.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace odd {

namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

[[noreturn]] void config_error(std::string_view key, const std::string& why) {
  throw Error(ErrorCode::ConfigError, std::string(key) + ": " + why);
}

double parse_number(std::string_view key, std::string_view text) {
  text = trim(text);
  if (text == "inf") return std::numeric_limits<double>::infinity();
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size() || text.empty()) {
    config_error(key, "expected a number, got '" + std::string(text) + "'");
  }
  return value;
}

std::vector<std::string_view> split_words(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && (s[i] == ' ' || s[i] == '\t')) ++i;
    const std::size_t start = i;
    while (i < s.size() && s[i] != ' ' && s[i] != '\t') ++i;
    if (i > start) out.push_back(s.substr(start, i - start));
  }
  return out;
}

PidGains* pid_by_name(ControllerGains& g, std::string_view loop) {
  if (loop == "pitch") return &g.pitch;
  if (loop == "velocity") return &g.velocity;
  if (loop == "yaw") return &g.yaw;
  if (loop == "spacing") return &g.spacing;
  if (loop == "spacing_rate") return &g.spacing_rate;
  if (loop == "motor") return &g.motor;
  return nullptr;
}

bool apply_gain_entry(ControllerGains& g, std::string_view key, std::string_view value) {
  constexpr std::string_view prefix = "gains.";
  if (!key.starts_with(prefix)) return false;
  const std::string_view rest = key.substr(prefix.size());
  if (rest == "k_pf") {
    g.k_pf = parse_number(key, value);
    return true;
  }
  if (rest == "balance_limit") {
    g.balance_limit = parse_number(key, value);
    return true;
  }
  if (rest == "rate_hz") {
    g.rate_hz = parse_number(key, value);
    return true;
  }
  const auto dot = rest.find('.');
  if (dot == std::string_view::npos) return false;
  PidGains* pid = pid_by_name(g, rest.substr(0, dot));
  if (pid == nullptr) return false;
  const std::string_view field = rest.substr(dot + 1);
  const double v = parse_number(key, value);
  if (field == "kp") pid->kp = v;
  else if (field == "ki") pid->ki = v;
  else if (field == "kd") pid->kd = v;
  else if (field == "min") pid->output_min = v;
  else if (field == "max") pid->output_max = v;
  else if (field == "integral_limit") pid->integral_limit = v;
  else return false;
  return true;
}

Disturbance parse_disturbance(std::string_view key, std::string_view value) {
  const auto words = split_words(value);
  if (words.size() < 2 || words.size() == 3 || words.size() > 5) {
    config_error(key, "expected '<kind> <magnitude> [start end [direction]]'");
  }
  Disturbance d;
  if (words[0] == "incline") d.kind = DisturbanceKind::Incline;
  else if (words[0] == "mass_asymmetry") d.kind = DisturbanceKind::MassAsymmetry;
  else if (words[0] == "lateral_push") d.kind = DisturbanceKind::LateralPush;
  else config_error(key, "unknown disturbance kind '" + std::string(words[0]) + "'");
  d.magnitude = parse_number(key, words[1]);
  if (words.size() >= 4) {
    d.t_start = parse_number(key, words[2]);
    d.t_end = parse_number(key, words[3]);
  }
  if (words.size() == 5) d.direction = parse_number(key, words[4]);
  return d;
}

constexpr double kDegToRad = std::numbers::pi / 180.0;

}  // namespace

std::string_view to_string(Mode m) noexcept {
  return m == Mode::Caster ? "caster" : "balance";
}

Mode parse_mode(std::string_view s) {
  if (s == "caster") return Mode::Caster;
  if (s == "balance") return Mode::Balance;
  throw Error(ErrorCode::ConfigError, "mode must be caster or balance, got '" + std::string(s) + "'");
}

void apply_config_entry(SimConfig& c, std::string_view key, std::string_view value) {
  key = trim(key);
  value = trim(value);
  auto num = [&] { return parse_number(key, value); };

  if (key == "dt") c.dt = num();
  else if (key == "mode") c.mode = parse_mode(value);
  else if (key == "plant") {
    if (value == "speed") c.plant = PlantModel::Speed;
    else if (value == "force") c.plant = PlantModel::Force;
    else config_error(key, "expected speed or force");
  } else if (key == "wheel_model") {
    if (value == "lag") c.wheel_model = WheelModel::Lag;
    else if (value == "effort") c.wheel_model = WheelModel::Effort;
    else config_error(key, "expected lag or effort");
  } else if (key == "seed") {
    const auto [ptr, ec] = std::from_chars(value.data(), value.data() + value.size(), c.seed);
    if (ec != std::errc{} || ptr != value.data() + value.size()) config_error(key, "expected an integer");
  }
  else if (key == "settle_time") c.settle_time = num();
  else if (key == "geometry.r") c.geometry.r = num();
  else if (key == "geometry.w") c.geometry.w = num();
  else if (key == "geometry.d_min") c.geometry.d_min = num();
  else if (key == "geometry.d_max") c.geometry.d_max = num();
  else if (key.starts_with("geometry.alpha") && key.size() >= 15 && key[14] >= '1' && key[14] <= '4') {
    const std::size_t i = static_cast<std::size_t>(key[14] - '1');
    const std::string_view suffix = key.substr(15);
    if (suffix == "_deg") c.geometry.alpha[i] = num() * kDegToRad;
    else if (suffix.empty()) c.geometry.alpha[i] = num();
    else config_error(key, "unknown key");
  }
  else if (key == "d_initial") c.d_initial = num();
  else if (key == "mass.left") c.mass_left = num();
  else if (key == "mass.right") c.mass_right = num();
  else if (key == "com_height") c.com_height = num();
  else if (key == "incline.x") c.ground_incline[0] = num();
  else if (key == "incline.y") c.ground_incline[1] = num();
  else if (key == "incline.x_deg") c.ground_incline[0] = num() * kDegToRad;
  else if (key == "incline.y_deg") c.ground_incline[1] = num() * kDegToRad;
  else if (key == "noise.pitch") c.noise.pitch = num();
  else if (key == "noise.pitch_rate") c.noise.pitch_rate = num();
  else if (key == "noise.yaw") c.noise.yaw = num();
  else if (key == "noise.yaw_rate") c.noise.yaw_rate = num();
  else if (key == "noise.d") c.noise.d_relative = num();
  else if (key == "noise.d_rate") c.noise.d_rate = num();
  else if (key == "noise.accel") c.noise.accel = num();
  else if (key == "noise.encoder_quantum") c.noise.encoder_quantum = num();
  else if (key == "wheel.tau") c.wheel_speed_tracking_tau = num();
  else if (key == "wheel.accel_max") c.wheel_accel_max = num();
  else if (key == "ground.slip_compliance") c.slip_compliance = num();
  else if (key == "ground.roller_slip_gain") c.roller_slip_gain = num();
  else if (key == "ground.rolling_resistance") c.rolling_resistance = num();
  else if (key == "ground.rolling_speed_scale") c.rolling_speed_scale = num();
  else if (key == "limits.vx") c.limits.vx = num();
  else if (key == "limits.vy") c.limits.vy = num();
  else if (key == "limits.wz") c.limits.wz = num();
  else if (key == "limits.ddot") c.limits.ddot = num();
  else if (key == "disturbance") c.disturbances.push_back(parse_disturbance(key, value));
  else if (!apply_gain_entry(c.gains, key, value)) config_error(key, "unknown key");
}

void SimConfig::validate() const {
  if (!(dt > 0.0) || !std::isfinite(dt)) {
    throw Error(ErrorCode::ConfigError, "dt must be positive");
  }
  geometry.validate();
  if (!geometry.contains(d_initial)) {
    throw Error(ErrorCode::SpacingOutOfRange, "d_initial outside the spacing limits");
  }
  (void)nominal_masses();
  if (mode == Mode::Balance && !(com_height > 0.0)) {
    throw Error(ErrorCode::ConfigError, "com_height must be positive in balance mode");
  }
  if (wheel_speed_tracking_tau < 0.0 || slip_compliance < 0.0 || rolling_resistance < 0.0 ||
      !(rolling_speed_scale > 0.0) || !(roller_slip_gain >= 1.0) || settle_time < 0.0 || !(wheel_accel_max > 0.0)) {
    throw Error(ErrorCode::ConfigError, "plant coefficients must be non-negative");
  }
  for (const Disturbance& d : disturbances) {
    if (d.kind == DisturbanceKind::MassAsymmetry && std::abs(d.magnitude) >= 2.0) {
      throw Error(ErrorCode::ConfigError, "mass asymmetry fraction must lie in (-2, 2)");
    }
  }
  gains.validate();
}

SimConfig parse_config(std::string_view text) {
  SimConfig config;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto eol = text.find('\n');
    std::string_view line = text.substr(0, eol);
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    ++line_no;
    if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw Error(ErrorCode::ConfigError,
                  "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    apply_config_entry(config, line.substr(0, eq), line.substr(eq + 1));
  }
  config.validate();
  return config;
}

SimConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::IoFailure, "cannot open config file " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

}  // namespace odd
