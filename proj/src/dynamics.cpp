#include "odd/dynamics.hpp"

#include <cmath>
#include <string>

namespace odd {

MassPair::MassPair(double left_kg, double right_kg)
    : left_(left_kg), right_(right_kg), total_(left_kg + right_kg) {
  if (!(left_kg > 0.0) || !(right_kg > 0.0) || !std::isfinite(total_)) {
    throw Error(ErrorCode::NonPositiveMass, "wheel-group masses must be positive, got (" +
                                                std::to_string(left_kg) + ", " +
                                                std::to_string(right_kg) + ")");
  }
}

double center_of_mass_offset(const MassPair& masses, Spacing d) {
  return (masses.left() - masses.right()) * d.meters() / (2.0 * masses.total());
}

double moment_of_inertia(const MassPair& masses, Spacing d) {
  const double dm = d.meters();
  return masses.left() * masses.right() * dm * dm / masses.total();
}

PseudoForces pseudo_forces(const MassPair& masses, const DynState& state) {
  const OddRate& v = state.rate;
  const double half_d = state.d.meters() / 2.0;
  const double spin_sq = v.phi_dot * v.phi_dot;
  return {
      masses.left() * v.phi_dot * (2.0 * v.y_dot - v.d_dot),
      masses.right() * v.phi_dot * (2.0 * v.y_dot + v.d_dot),
      masses.left() * (v.x_dot * v.phi_dot - spin_sq * half_d),
      masses.right() * (v.x_dot * v.phi_dot + spin_sq * half_d),
  };
}

OddAccel forward_dynamics(const MassPair& masses, const DynState& state,
                          const WheelGroupForces& f) {
  const PseudoForces p = pseudo_forces(masses, state);
  const double m = masses.total();
  const double d = state.d.meters();
  const double inertia = moment_of_inertia(masses, state.d);

  const double drive_left = f.fx_left - p.coriolis_left;
  const double drive_right = f.fx_right + p.coriolis_right;
  const double lateral_left = f.fy_left - p.centrifugal_left;
  const double lateral_right = f.fy_right - p.centrifugal_right;

  OddAccel a;
  a.x_ddot = (drive_left + drive_right) / m;
  a.y_ddot = (lateral_left + lateral_right) / m;
  a.phi_ddot =
      (drive_right * masses.left() * d / m - drive_left * masses.right() * d / m) / inertia;
  a.d_ddot = lateral_right / masses.right() - lateral_left / masses.left();
  return a;
}

WheelGroupForces inverse_dynamics(const MassPair& masses, const DynState& state,
                                  const OddAccel& a) {
  const PseudoForces p = pseudo_forces(masses, state);
  const double torque_share = moment_of_inertia(masses, state.d) * a.phi_ddot / state.d.meters();
  const double reduced = masses.left() * masses.right() * a.d_ddot / masses.total();
  return {
      masses.left() * a.x_ddot - torque_share + p.coriolis_left,
      masses.left() * a.y_ddot - reduced + p.centrifugal_left,
      masses.right() * a.x_ddot + torque_share - p.coriolis_right,
      masses.right() * a.y_ddot + reduced + p.centrifugal_right,
  };
}

}  // namespace odd
