#include "odd/simulator.hpp"

#include <algorithm>
#include <cmath>

namespace odd {

namespace {

// Lateral position of each wheel contact relative to B (L at +d/2).
std::array<double, 4> wheel_offsets(double d, double w) {
  return {d / 2 + w / 2, d / 2 - w / 2, -d / 2 + w / 2, -d / 2 - w / 2};
}

std::array<double, 2> slope(const SimConfig& c, double t) {
  std::array<double, 2> s = c.ground_incline;
  for (const Disturbance& d : c.disturbances) {
    if (d.kind == DisturbanceKind::Incline && d.active_at(t)) {
      s[0] += d.magnitude * std::cos(d.direction);
      s[1] += d.magnitude * std::sin(d.direction);
    }
  }
  return s;
}

bool has_external_load(const SimConfig& c, double t) {
  if (c.ground_incline[0] != 0.0 || c.ground_incline[1] != 0.0) return true;
  return std::any_of(c.disturbances.begin(), c.disturbances.end(), [t](const Disturbance& d) {
    return d.kind != DisturbanceKind::MassAsymmetry && d.active_at(t);
  });
}

// Rolling resistance of each wheel, along B_x, opposing its spin.
std::array<double, 4> rolling_forces(const SimConfig& c, const MassPair& m,
                                     const WheelSpeeds& speeds) {
  std::array<double, 4> f{};
  if (c.rolling_resistance == 0.0) return f;
  const double normal_left = m.left() * kGravity / 2.0;
  const double normal_right = m.right() * kGravity / 2.0;
  for (std::size_t i = 0; i < 4; ++i) {
    const double normal = i < 2 ? normal_left : normal_right;
    f[i] = -c.rolling_resistance * normal * std::tanh(speeds[i] / c.rolling_speed_scale);
  }
  return f;
}

// Solves a 4x4 symmetric positive definite system by Gaussian elimination.
std::array<double, 4> solve4(std::array<std::array<double, 4>, 4> k, std::array<double, 4> b) {
  for (std::size_t col = 0; col < 4; ++col) {
    for (std::size_t row = col + 1; row < 4; ++row) {
      const double f = k[row][col] / k[col][col];
      for (std::size_t j = col; j < 4; ++j) k[row][j] -= f * k[col][j];
      b[row] -= f * b[col];
    }
  }
  std::array<double, 4> x{};
  for (std::size_t i = 4; i-- > 0;) {
    double acc = b[i];
    for (std::size_t j = i + 1; j < 4; ++j) acc -= k[i][j] * x[j];
    x[i] = acc / k[i][i];
  }
  return x;
}

// Speed-mode ground compliance. Each contact resists slip along its roller
// axis like a damper scaled by the normal load (slip_compliance is slip speed
// per unit tangential/normal force). Across the roller axis it is equally
// stiff while the roller is still, and roller_slip_gain times softer once the
// roller turns. The slip of (x, y, phi, d) is the quasi-static balance of
// those dampers against the external and rolling-resistance loads.
OddRate ground_slip(const SimConfig& c, const RobotState& s, const WheelSpeeds& speeds,
                    const OddRate& kinematic, const MassPair& m) {
  OddRate slip;
  const bool loaded = has_external_load(c, s.t);
  if (c.slip_compliance == 0.0 || (!loaded && c.rolling_resistance == 0.0)) return slip;

  double activity = 0.0;
  for (double ws : speeds) activity = std::max(activity, std::tanh(std::abs(ws) / c.rolling_speed_scale));
  if (activity == 0.0) return slip;

  WheelGroupForces groups;
  if (loaded) groups = external_group_forces(c, s, m);
  const std::array<double, 4> rolling = rolling_forces(c, m, speeds);
  const std::array<double, 4> y = wheel_offsets(s.d, c.geometry.w);
  const double roller_scale = c.rolling_speed_scale * c.geometry.r;

  std::array<std::array<double, 4>, 4> k{};
  std::array<double, 4> q{};
  for (std::size_t i = 0; i < 4; ++i) {
    const bool left = i < 2;
    const double normal = (left ? m.left() : m.right()) * kGravity / 2.0;
    // Contact velocity rows: v_x = x_dot - y_i phi_dot, v_y = y_dot +- d_dot / 2.
    const std::array<double, 4> jx{1.0, 0.0, -y[i], 0.0};
    const std::array<double, 4> jy{0.0, 1.0, 0.0, left ? 0.5 : -0.5};
    const double ca = std::cos(c.geometry.alpha[i]);
    const double sa = std::sin(c.geometry.alpha[i]);

    const double vx = kinematic.x_dot - y[i] * kinematic.phi_dot - c.geometry.r * speeds[i];
    const double vy = kinematic.y_dot + (left ? 0.5 : -0.5) * kinematic.d_dot;
    const double roller_speed = -sa * vx + ca * vy;
    const double along = normal / c.slip_compliance;
    const double across =
        along / (1.0 + (c.roller_slip_gain - 1.0) * std::tanh(std::abs(roller_speed) / roller_scale));

    const double axx = along * ca * ca + across * sa * sa;
    const double ayy = along * sa * sa + across * ca * ca;
    const double axy = (along - across) * ca * sa;
    const double fx = (left ? groups.fx_left : groups.fx_right) / 2.0 + rolling[i];
    const double fy = (left ? groups.fy_left : groups.fy_right) / 2.0;
    for (std::size_t a = 0; a < 4; ++a) {
      q[a] += jx[a] * fx + jy[a] * fy;
      for (std::size_t b = 0; b < 4; ++b) {
        k[a][b] += jx[a] * (axx * jx[b] + axy * jy[b]) + jy[a] * (axy * jx[b] + ayy * jy[b]);
      }
    }
  }
  const std::array<double, 4> v = solve4(k, q);
  return {activity * v[0], activity * v[1], activity * v[2], activity * v[3]};
}

WheelGroupForces rolling_group_forces(const SimConfig& c, const MassPair& m,
                                      const WheelSpeeds& speeds) {
  const auto f = rolling_forces(c, m, speeds);
  return {f[0] + f[1], 0.0, f[2] + f[3], 0.0};
}

RobotState advance_body(const RobotState& s, const WheelSpeeds& speeds, const SimConfig& c,
                        StepEvents* events) {
  const double dt = c.dt;
  const RigGeometry& geom = c.geometry;
  const Spacing spacing(s.d);
  const MassPair masses = effective_masses(c, s.t);

  const OddRate kinematic = forward_kinematics(geom, spacing, speeds);
  OddRate rate;
  if (c.plant == PlantModel::Speed) {
    const OddRate slip = ground_slip(c, s, speeds, kinematic, masses);
    rate = {kinematic.x_dot + slip.x_dot, kinematic.y_dot + slip.y_dot,
            kinematic.phi_dot + slip.phi_dot, kinematic.d_dot + slip.d_dot};
  } else {
    // Wheel groups push whatever force makes the body reach the kinematic
    // rate within one step; external loads then act on top of that.
    const DynState dyn{s.rate, spacing};
    const OddAccel wanted{(kinematic.x_dot - s.rate.x_dot) / dt, (kinematic.y_dot - s.rate.y_dot) / dt,
                          (kinematic.phi_dot - s.rate.phi_dot) / dt,
                          (kinematic.d_dot - s.rate.d_dot) / dt};
    WheelGroupForces forces = inverse_dynamics(masses, dyn, wanted);
    if (has_external_load(c, s.t)) forces += external_group_forces(c, s, masses);
    if (c.rolling_resistance != 0.0) forces += rolling_group_forces(c, masses, speeds);
    const OddAccel a = forward_dynamics(masses, dyn, forces);
    rate = {s.rate.x_dot + a.x_ddot * dt, s.rate.y_dot + a.y_ddot * dt,
            s.rate.phi_dot + a.phi_ddot * dt, s.rate.d_dot + a.d_ddot * dt};
  }

  RobotState next = s;
  double d_next = s.d + rate.d_dot * dt;
  if (d_next > geom.d_max || d_next < geom.d_min) {
    d_next = std::clamp(d_next, geom.d_min, geom.d_max);
    rate.d_dot = (d_next - s.d) / dt;
    if (events) events->spacing_limit_hit = true;
  }
  next.d = d_next;

  // Position is integrated with the new rates, rotated by the heading at
  // the middle of the step.
  const double heading_mid = s.phi + 0.5 * rate.phi_dot * dt;
  const double c_mid = std::cos(heading_mid);
  const double s_mid = std::sin(heading_mid);
  next.x = s.x + (rate.x_dot * c_mid - rate.y_dot * s_mid) * dt;
  next.y = s.y + (rate.x_dot * s_mid + rate.y_dot * c_mid) * dt;
  next.phi = wrap_angle(s.phi + rate.phi_dot * dt);

  next.accel_body = {(rate.x_dot - s.rate.x_dot) / dt, (rate.y_dot - s.rate.y_dot) / dt};
  next.rate = rate;
  next.wheel_speeds = speeds;
  for (std::size_t i = 0; i < 4; ++i) next.wheel_angles[i] = s.wheel_angles[i] + speeds[i] * dt;

  if (c.mode == Mode::Balance) {
    std::tie(next.pitch, next.pitch_rate) = apply_pitch_dynamics(s, next.accel_body[0], c);
  } else {
    next.pitch = 0.0;
    next.pitch_rate = 0.0;
  }
  next.t = s.t + dt;
  return next;
}

}  // namespace

RobotState initial_state(const SimConfig& config) {
  RobotState s;
  s.d = config.d_initial;
  return s;
}

MassPair effective_masses(const SimConfig& c, double t) {
  double left = c.mass_left;
  double right = c.mass_right;
  for (const Disturbance& d : c.disturbances) {
    if (d.kind == DisturbanceKind::MassAsymmetry && d.active_at(t)) {
      left *= 1.0 + d.magnitude / 2.0;
      right *= 1.0 - d.magnitude / 2.0;
    }
  }
  return MassPair(left, right);
}

WheelGroupForces external_group_forces(const SimConfig& c, const RobotState& s,
                                       const MassPair& m) {
  const auto [sx, sy] = slope(c, s.t);
  // Downhill acceleration in the world frame, rotated into B.
  double ax = -kGravity * std::sin(sx);
  double ay = -kGravity * std::sin(sy);
  double push_x = 0.0;
  double push_y = 0.0;
  for (const Disturbance& d : c.disturbances) {
    if (d.kind == DisturbanceKind::LateralPush && d.active_at(s.t)) {
      push_x += d.magnitude * std::cos(d.direction);
      push_y += d.magnitude * std::sin(d.direction);
    }
  }
  const double cp = std::cos(s.phi);
  const double sp = std::sin(s.phi);
  const double abx = cp * ax + sp * ay;
  const double aby = -sp * ax + cp * ay;
  const double pbx = (cp * push_x + sp * push_y) / 2.0;
  const double pby = (-sp * push_x + cp * push_y) / 2.0;
  return {m.left() * abx + pbx, m.left() * aby + pby, m.right() * abx + pbx,
          m.right() * aby + pby};
}

RobotState step(const RobotState& s, const WheelSpeeds& setpoints, const SimConfig& c,
                StepEvents* events) {
  const double tau = c.wheel_speed_tracking_tau;
  // Exact discretization of the first-order lag over one step.
  const double blend = tau > 0.0 ? -std::expm1(-c.dt / tau) : 1.0;
  WheelSpeeds speeds{};
  for (std::size_t i = 0; i < 4; ++i) {
    speeds[i] = s.wheel_speeds[i] + blend * (setpoints[i] - s.wheel_speeds[i]);
  }
  return advance_body(s, speeds, c, events);
}

RobotState step_effort(const RobotState& s, const WheelSpeeds& efforts, const SimConfig& c,
                       StepEvents* events) {
  WheelSpeeds speeds{};
  for (std::size_t i = 0; i < 4; ++i) {
    speeds[i] = s.wheel_speeds[i] + std::clamp(efforts[i], -1.0, 1.0) * c.wheel_accel_max * c.dt;
  }
  return advance_body(s, speeds, c, events);
}

SensorFrame sense(const RobotState& s, const SimConfig& c, std::mt19937_64& rng) {
  auto noisy = [&rng](double truth, double stddev) {
    if (stddev <= 0.0) return truth;
    std::normal_distribution<double> n(0.0, stddev);
    return truth + n(rng);
  };

  SensorFrame f;
  f.t = s.t;
  f.pitch = noisy(s.pitch, c.noise.pitch);
  f.pitch_rate = noisy(s.pitch_rate, c.noise.pitch_rate);
  f.yaw = wrap_angle(noisy(s.phi, c.noise.yaw));
  f.yaw_rate = noisy(s.rate.phi_dot, c.noise.yaw_rate);
  f.d_measured = c.noise.d_relative > 0.0 ? s.d * noisy(1.0, c.noise.d_relative) : s.d;
  f.d_rate = noisy(s.rate.d_dot, c.noise.d_rate);
  for (std::size_t i = 0; i < 4; ++i) {
    const double q = c.noise.encoder_quantum;
    f.wheel_speeds_measured[i] = q > 0.0 ? std::round(s.wheel_speeds[i] / q) * q : s.wheel_speeds[i];
  }
  f.accel_body = {noisy(s.accel_body[0], c.noise.accel), noisy(s.accel_body[1], c.noise.accel)};

  const double d_odometry = f.d_measured > 0.0 ? f.d_measured : s.d;
  f.velocity_x = forward_kinematics(c.geometry, Spacing(d_odometry), f.wheel_speeds_measured).x_dot;
  return f;
}

std::pair<double, double> apply_pitch_dynamics(const RobotState& s, double x_accel_cmd,
                                               const SimConfig& c) {
  if (c.mode != Mode::Balance) {
    throw Error(ErrorCode::ModeMismatch, "pitch dynamics only run in balance mode");
  }
  const double pitch_accel =
      (kGravity * std::sin(s.pitch) - x_accel_cmd * std::cos(s.pitch)) / c.com_height;
  const double rate = s.pitch_rate + pitch_accel * c.dt;
  return {s.pitch + rate * c.dt, rate};
}

}  // namespace odd
