#include "odd/verify.hpp"

#include <Eigen/Dense>

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>
#include <thread>

#include "odd/experiments.hpp"
#include "odd/line_client.hpp"
#include "odd/service.hpp"

namespace odd {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

std::string fmt(const char* pattern, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, pattern, args...);
  return buf;
}

// Runs `body`, which fills pass/detail, and stamps the wall time.
CheckResult timed(std::string name, auto body) {
  CheckResult r{std::move(name), false, {}, 0.0};
  const auto start = Clock::now();
  try {
    body(r);
  } catch (const std::exception& e) {
    r.pass = false;
    r.detail = std::string("exception: ") + e.what();
  }
  r.seconds = seconds_since(start);
  return r;
}

// Wheel speeds from group rates, assembled directly from the per-wheel rim
// constraint r*theta_dot*cos(a) = cos(a)*x_dot_g + sin(a)*y_dot_g - y_off*cos(a)*phi_dot,
// with phi_dot = (x_dot_R - x_dot_L) / d for the rigidly coupled groups.
Eigen::Matrix4d wheel_constraint_matrix(const RigGeometry& g, double d) {
  const double k = g.w / (2.0 * d);
  Eigen::Matrix4d a;
  a << 1.0 + k, std::tan(g.alpha[0]), -k, 0.0,
       1.0 - k, std::tan(g.alpha[1]), k, 0.0,
       k, 0.0, 1.0 - k, std::tan(g.alpha[2]),
       -k, 0.0, 1.0 + k, std::tan(g.alpha[3]);
  return a / g.r;
}

// Group rates -> (x_dot, y_dot, phi_dot, d_dot), left group at +d/2.
Eigen::Matrix4d group_to_body(double d) {
  Eigen::Matrix4d m;
  m << 0.5, 0.0, 0.5, 0.0,
       0.0, 0.5, 0.0, 0.5,
       -1.0 / d, 0.0, 1.0 / d, 0.0,
       0.0, 1.0, 0.0, -1.0;
  return m;
}

Eigen::Matrix4d to_eigen(const Mat4& m) {
  Eigen::Matrix4d e;
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) e(i, j) = m[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
  }
  return e;
}

struct Sampler {
  std::mt19937_64 rng;
  double operator()(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }
};

RigGeometry random_geometry(Sampler& u, double max_alpha_deg) {
  RigGeometry g;
  const double lim = max_alpha_deg * std::numbers::pi / 180.0;
  for (double& a : g.alpha) a = u(-lim, lim);
  g.w = u(0.01, 1.0);
  g.r = u(0.01, 0.5);
  g.d_min = 0.01;
  g.d_max = 10.0;
  return g;
}

double rel_error(const Eigen::Matrix4d& got, const Eigen::Matrix4d& want) {
  return (got - want).cwiseAbs().maxCoeff() / want.cwiseAbs().maxCoeff();
}

double max_abs(const OddRate& a, const OddRate& b) {
  return std::max({std::abs(a.x_dot - b.x_dot), std::abs(a.y_dot - b.y_dot),
                   std::abs(a.phi_dot - b.phi_dot), std::abs(a.d_dot - b.d_dot)});
}

SimConfig noiseless(double dt) {
  SimConfig c;
  c.dt = dt;
  return c;
}

// Straight translation along the given body rate, for drift-per-metre checks.
CommandScript straight(const char* name, OddRate rate, double seconds) {
  return {name, {ScriptSegment::hold(seconds, rate)}, {}, {}};
}

}  // namespace

SimConfig disturbance_scenario() {
  SimConfig c;
  c.dt = 1e-3;
  c.ground_incline = {0.5 * std::numbers::pi / 180.0, 0.0};
  c.disturbances.push_back({DisturbanceKind::MassAsymmetry, 0.05});
  c.rolling_resistance = 0.03;
  return c;
}

CheckResult check_matrix_identities(const VerifyOptions& o) {
  return timed("matrix identities (d, 1000 draws)", [&](CheckResult& r) {
    Sampler u{std::mt19937_64(o.seed)};
    double worst = 0.0;
    const auto start = Clock::now();
    for (int k = 0; k < 1000; ++k) {
      const Spacing d(10.0 * (1.0 - u(0.0, 1.0)));
      const Eigen::Matrix4d p = to_eigen(odd_forward_matrix(d)) * to_eigen(odd_inverse_matrix(d));
      const Eigen::Matrix4d q = to_eigen(odd_inverse_matrix(d)) * to_eigen(odd_forward_matrix(d));
      worst = std::max({worst, (p - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff(),
                        (q - Eigen::Matrix4d::Identity()).cwiseAbs().maxCoeff()});
    }
    const double elapsed = seconds_since(start);
    r.pass = worst < 1e-12 && elapsed < 1.0;
    r.detail = fmt("max |entry - I| = %.3e (< 1e-12), %.3f s (< 1 s)", worst, elapsed);
  });
}

CheckResult check_oracle_equivalence(const VerifyOptions& o) {
  return timed("wheel matrices vs numeric inversion (1000 draws)", [&](CheckResult& r) {
    Sampler u{std::mt19937_64(o.seed + 1)};
    double worst = 0.0;
    int draws = 0;
    const auto start = Clock::now();
    while (draws < 1000) {
      const RigGeometry g = random_geometry(u, 75.0);
      const double d = u(0.05, 3.0);
      const Eigen::Matrix4d a = wheel_constraint_matrix(g, d);
      const Eigen::PartialPivLU<Eigen::Matrix4d> lu(a);
      if (!(lu.rcond() > 1e-6)) continue;  // keep to non-singular draws
      const Eigen::Matrix4d groups = lu.inverse();
      const Eigen::Matrix4d body = group_to_body(d) * groups;
      worst = std::max({worst, rel_error(to_eigen(group_velocity_matrix(g, Spacing(d))), groups),
                        rel_error(to_eigen(rig_kinematic_matrix(g, Spacing(d))), body)});
      ++draws;
    }
    const double elapsed = seconds_since(start);
    r.pass = worst < 1e-9 && elapsed < 5.0;
    r.detail = fmt("max relative error = %.3e (< 1e-9), %.3f s (< 5 s)", worst, elapsed);
  });
}

CheckResult check_kinematic_roundtrips(const VerifyOptions& o) {
  return timed("kinematic roundtrips (1000 rates)", [&](CheckResult& r) {
    Sampler u{std::mt19937_64(o.seed + 2)};
    double odd_worst = 0.0;
    double rig_worst = 0.0;
    for (int k = 0; k < 1000; ++k) {
      const OddRate rate{u(-5, 5), u(-5, 5), u(-5, 5), u(-5, 5)};
      const Spacing d(u(0.05, 5.0));
      odd_worst = std::max(odd_worst, max_abs(odd_forward(odd_inverse(rate, d), d), rate));

      RigGeometry g = random_geometry(u, 60.0);
      const double dm = u(0.05, 3.0);
      g.d_min = dm;
      g.d_max = dm;
      if (std::abs(singularity_metric(g, Spacing(dm))) < 0.05 * dm) {
        g.alpha = RigGeometry{}.alpha;
      }
      rig_worst = std::max(
          rig_worst, max_abs(forward_kinematics(g, Spacing(dm), inverse_kinematics(g, Spacing(dm), rate)), rate));
    }
    r.pass = odd_worst < 1e-9 && rig_worst < 1e-9;
    r.detail = fmt("odd %.3e, mecanum %.3e (< 1e-9)", odd_worst, rig_worst);
  });
}

CheckResult check_dynamics(const VerifyOptions& o) {
  return timed("dynamics roundtrip, inertia, pseudo-forces", [&](CheckResult& r) {
    Sampler u{std::mt19937_64(o.seed + 3)};
    double accel_worst = 0.0;
    double inertia_worst = 0.0;
    bool zero_at_rest = true;
    for (int k = 0; k < 1000; ++k) {
      const double ml = u(0.1, 20.0);
      const double mr = u(0.1, 20.0);
      const MassPair m(ml, mr);
      const Spacing d(u(0.05, 3.0));
      const DynState s{{u(-3, 3), u(-3, 3), u(-3, 3), u(-3, 3)}, d};
      const OddAccel a{u(-10, 10), u(-10, 10), u(-10, 10), u(-10, 10)};
      const OddAccel back = forward_dynamics(m, s, inverse_dynamics(m, s, a));
      accel_worst = std::max({accel_worst, std::abs(back.x_ddot - a.x_ddot), std::abs(back.y_ddot - a.y_ddot),
                              std::abs(back.phi_ddot - a.phi_ddot), std::abs(back.d_ddot - a.d_ddot)});

      const double dd = d.meters();
      const double yc = (ml * dd / 2 + mr * (-dd / 2)) / (ml + mr);
      const double brute = ml * (yc - dd / 2) * (yc - dd / 2) + mr * (yc + dd / 2) * (yc + dd / 2);
      inertia_worst = std::max(inertia_worst, std::abs(moment_of_inertia(m, d) - brute));

      DynState still = s;
      still.rate.phi_dot = 0.0;
      const PseudoForces p = pseudo_forces(m, still);
      zero_at_rest = zero_at_rest && p.coriolis_left == 0.0 && p.coriolis_right == 0.0 &&
                     p.centrifugal_left == 0.0 && p.centrifugal_right == 0.0;
    }
    r.pass = accel_worst < 1e-9 && inertia_worst < 1e-12 && zero_at_rest;
    r.detail = fmt("roundtrip %.3e (< 1e-9), inertia %.3e (< 1e-12), pseudo-forces at rest %s",
                   accel_worst, inertia_worst, zero_at_rest ? "exactly 0" : "NONZERO");
  });
}

CheckResult check_circle_closure(const VerifyOptions&) {
  return timed("circle closure (circle_xz, caster, noiseless)", [&](CheckResult& r) {
    const auto start = Clock::now();
    const double coarse = compute_metrics(run_script(builtin_script("circle_xz"), noiseless(1e-3))).endpoint_deviation;
    const double run_seconds = seconds_since(start);
    const double fine = compute_metrics(run_script(builtin_script("circle_xz"), noiseless(5e-4))).endpoint_deviation;
    const double ratio = coarse / fine;
    r.pass = coarse < 1e-3 && ratio >= 2.0 && run_seconds < 10.0;
    r.detail = fmt("dt=1ms: %.3e m (< 1e-3), dt=0.5ms: %.3e m, ratio %.2f (>= 2), run %.2f s (< 10 s)",
                   coarse, fine, ratio, run_seconds);
  });
}

CheckResult check_loop_closure(const VerifyOptions&) {
  return timed("square/rhombus closure, d_sweep return", [&](CheckResult& r) {
    const SimConfig c = noiseless(1e-3);
    const double square = compute_metrics(run_script(builtin_script("square"), c)).endpoint_deviation;
    const double rhombus = compute_metrics(run_script(builtin_script("rhombus"), c)).endpoint_deviation;
    double sweep = 0.0;
    for (const char* name : {"d_sweep_x", "d_sweep_y", "d_sweep_spin"}) {
      const CommandScript s = builtin_script(name);
      const TrajectoryLog log = run_script(s, c);
      sweep = std::max(sweep, std::abs(log.rows.back().d - s.initial_d.value_or(c.d_initial)));
    }
    r.pass = square < 1e-3 && rhombus < 1e-3 && sweep < 1e-6;
    r.detail = fmt("square %.3e m, rhombus %.3e m (< 1e-3), d_sweep |d_end - d_start| %.3e m (< 1e-6)",
                   square, rhombus, sweep);
  });
}

CheckResult check_disturbance_ordering(const VerifyOptions&) {
  return timed("incline + mass asymmetry ordering", [&](CheckResult& r) {
    const SimConfig c = disturbance_scenario();
    auto drift_per_metre = [&](const CommandScript& s) {
      const RunMetrics m = compute_metrics(run_script(s, c));
      return m.heading_drift / m.path_length;
    };
    const double along_x = drift_per_metre(straight("x", {0.5, 0, 0, 0}, 4.0));
    const double along_y = drift_per_metre(straight("y", {0, 0.5, 0, 0}, 4.0));
    const double xz = compute_metrics(run_script(builtin_script("circle_xz"), c)).endpoint_deviation;
    const double yz = compute_metrics(run_script(builtin_script("circle_yz"), c)).endpoint_deviation;
    r.pass = along_y > along_x && yz >= xz;
    r.detail = fmt("drift/m B_y %.3e > B_x %.3e rad/m; circle_yz %.3e >= circle_xz %.3e m", along_y,
                   along_x, yz, xz);
  });
}

CheckResult check_closed_loop_control(const VerifyOptions&) {
  return timed("closed-loop control", [&](CheckResult& r) {
    SimConfig c;
    c.settle_time = 0.0;

    ScriptSegment step = ScriptSegment::hold(5.0, {});
    step.d_setpoint = c.d_initial + 0.1;
    const TrajectoryLog dlog = run_script({"d_step", {step}, {}, {}}, c);
    double last_outside = 0.0;
    for (const LogRow& row : dlog.rows) {
      if (std::abs(row.d - *step.d_setpoint) > 0.02 * 0.1) last_outside = row.t;
    }
    const double d_error = std::abs(dlog.rows.back().d - *step.d_setpoint);
    const bool d_ok = last_outside < dlog.rows.back().t - 1.0 && d_error < 1e-3;

    SimConfig b = c;
    b.mode = Mode::Balance;
    RobotState tilted = initial_state(b);
    tilted.pitch = 0.05;
    const TrajectoryLog blog = run_script({"recover", {ScriptSegment::hold(4.0, {})}, {}, {}}, b, tilted);
    double last_tilted = 0.0;
    for (const LogRow& row : blog.rows) {
      if (std::abs(row.pitch) >= 0.01) last_tilted = row.t;
    }
    const bool b_ok = last_tilted < 2.0;

    // Sustained saturation: the integral may only grow until the output pins,
    // and must release the output on the first sample after the error reverses.
    const PidGains g = default_gains().motor;
    const double e = 10.0;
    const double dt = 0.005;
    const double bound = std::min(g.integral_limit, (g.output_max - g.kp * e) / g.ki + e * dt);
    PidMemory mem;
    double worst_integral = 0.0;
    for (int k = 0; k < 4000; ++k) {
      pid_step(g, mem, e, dt);
      worst_integral = std::max(worst_integral, std::abs(mem.integral_accum));
    }
    const double released = pid_step(g, mem, -e, dt);
    const bool w_ok = worst_integral <= bound && released < g.output_max;

    r.pass = d_ok && b_ok && w_ok;
    r.detail = fmt("d step: in +-2%% band after %.3f s, error %.2e m (< 1e-3); pitch < 0.01 rad after "
                   "%.3f s (< 2 s); 20 s saturated: |integral| max %.3f (<= %.3f), output %.3f after reversal",
                   last_outside, d_error, last_tilted, worst_integral, bound, released);
  });
}

CheckResult check_determinism(const VerifyOptions&) {
  return timed("determinism (identical config + seed)", [&](CheckResult& r) {
    SimConfig c;
    c.noise.pitch = 0.002;
    c.noise.yaw = 0.002;
    c.noise.yaw_rate = 0.01;
    c.noise.d_relative = 0.001;
    c.noise.d_rate = 0.002;
    c.noise.encoder_quantum = 2.0 * std::numbers::pi / 8192 / 0.005;
    c.seed = 7;
    const std::string a = format_log(run_script(builtin_script("d_sweep_spin"), c));
    const std::string b = format_log(run_script(builtin_script("d_sweep_spin"), c));
    c.seed = 8;
    const std::string other = format_log(run_script(builtin_script("d_sweep_spin"), c));
    r.pass = a == b && a != other;
    r.detail = fmt("%zu-byte logs %s; a different seed %s", a.size(), a == b ? "identical" : "DIFFER",
                   a != other ? "differs" : "does NOT differ");
  });
}

CheckResult check_service_contract(const VerifyOptions& o) {
  return timed("service contract (headless client)", [&](CheckResult& r) {
    ServerOptions options;
    options.port = 0;
    Server server(SimConfig{}, Course{}, options);
    server.start();
    LineClient driver("127.0.0.1", server.port());
    auto latest_state = [&](int wait_ms) {
      std::optional<StateMessage> last;
      const auto until = Clock::now() + std::chrono::milliseconds(wait_ms);
      while (Clock::now() < until) {
        const auto line = driver.read_line(10);
        if (line && line->find("\"state\"") != std::string::npos) last = parse_state(*line);
      }
      return last;
    };
    latest_state(200);

    // Out-of-order: 1, 3, 2 must leave command 3 in force.
    driver.send_line(format_command({0.3, 0, 0, 0, 1, {}}));
    driver.send_line(format_command({0.2, 0, 0, 0, 3, {}}));
    driver.send_line(format_command({0.9, 0, 0, 0, 2, {}}));
    const auto held = latest_state(150);
    const bool order_ok = held && std::abs(held->vx - 0.2) < 1e-3;

    // A second connection may watch but not drive.
    LineClient watcher("127.0.0.1", server.port());
    watcher.send_line(format_command({0.5, 0, 0, 0, 1, {}}));
    bool busy = false;
    for (int k = 0; k < 50 && !busy; ++k) {
      const auto line = watcher.read_line(20);
      busy = line && line->find("DriverSlotBusy") != std::string::npos;
    }

    // Silence: the twist must be gone within 500 ms of the last command.
    const auto before = latest_state(40);
    driver.send_line(format_command({0.5, 0.2, 0.4, 0, 4, {}}));
    double sent_after = before ? before->t : 0.0;
    double zero_at = -1.0;
    const auto until = Clock::now() + std::chrono::milliseconds(1200);
    while (Clock::now() < until) {
      const auto line = driver.read_line(20);
      if (!line || line->find("\"state\"") == std::string::npos) continue;
      const StateMessage s = parse_state(*line);
      const bool still = std::abs(s.vx) < 1e-3 && std::abs(s.vy) < 1e-3 && std::abs(s.wz) < 1e-3;
      if (!still) zero_at = -1.0;
      else if (zero_at < 0.0 && s.t > sent_after + 0.05) zero_at = s.t;
    }
    const double stop_delay = zero_at < 0.0 ? 1e9 : zero_at - sent_after;
    const bool timeout_ok = stop_delay <= 0.5;

    // Hold the session open for the full duration before judging tick fidelity.
    while (server.wall_time() < o.service_seconds) {
      driver.read_line(100);
      watcher.read_line(1);
    }
    const double wall = server.wall_time();
    const double drift = std::abs(server.sim_time() - wall) / wall;
    server.stop();

    r.pass = order_ok && busy && timeout_ok && drift < 0.01;
    r.detail = fmt("seq [1,3,2] -> vx %.4f (want 0.2); second driver refused: %s; twist zero %.3f s after "
                   "last cmd (<= 0.5); %.1f s session drift %.4f%% (< 1%%)",
                   held ? held->vx : NAN, busy ? "yes" : "NO", stop_delay, wall, 100.0 * drift);
  });
}

std::vector<CheckResult> run_verification(const VerifyOptions& o,
                                          const std::function<void(const CheckResult&)>& report) {
  using Check = CheckResult (*)(const VerifyOptions&);
  std::vector<Check> checks{check_matrix_identities,  check_oracle_equivalence,  check_kinematic_roundtrips,
                            check_dynamics,           check_circle_closure,      check_loop_closure,
                            check_disturbance_ordering, check_closed_loop_control, check_determinism};
  if (o.include_service) checks.push_back(check_service_contract);
  std::vector<CheckResult> results;
  for (Check c : checks) {
    results.push_back(c(o));
    if (report) report(results.back());
  }
  return results;
}

}  // namespace odd
