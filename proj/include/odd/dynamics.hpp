#pragma once

#include "odd/drive_models.hpp"

namespace odd {

/// Lumped masses of the left and right wheel groups (including whatever
/// payload rides on each group's platform).
class MassPair {
 public:
  MassPair(double left_kg, double right_kg);

  double left() const noexcept { return left_; }
  double right() const noexcept { return right_; }
  double total() const noexcept { return total_; }

 private:
  double left_;
  double right_;
  double total_;
};

struct DynState {
  OddRate rate;
  Spacing d;
};

/// Body-frame resultant force on each wheel group.
struct WheelGroupForces {
  double fx_left = 0.0;
  double fy_left = 0.0;
  double fx_right = 0.0;
  double fy_right = 0.0;

  WheelGroupForces& operator+=(const WheelGroupForces& o) noexcept {
    fx_left += o.fx_left;
    fy_left += o.fy_left;
    fx_right += o.fx_right;
    fy_right += o.fy_right;
    return *this;
  }
};

struct PseudoForces {
  double coriolis_left = 0.0;
  double coriolis_right = 0.0;
  double centrifugal_left = 0.0;
  double centrifugal_right = 0.0;
};

struct OddAccel {
  double x_ddot = 0.0;
  double y_ddot = 0.0;
  double phi_ddot = 0.0;
  double d_ddot = 0.0;
};

/// Lateral offset of the center of mass from the midpoint B.
double center_of_mass_offset(const MassPair& masses, Spacing d);

/// Yaw inertia of the two lumped groups about their common center of mass.
double moment_of_inertia(const MassPair& masses, Spacing d);

/// Coriolis and centrifugal terms. The centrifugal terms are evaluated as
/// m * (x_dot * phi_dot -/+ phi_dot^2 * d / 2) so they stay finite (and
/// exactly zero) at phi_dot = 0.
PseudoForces pseudo_forces(const MassPair& masses, const DynState& state);

OddAccel forward_dynamics(const MassPair& masses, const DynState& state,
                          const WheelGroupForces& forces);

WheelGroupForces inverse_dynamics(const MassPair& masses, const DynState& state,
                                  const OddAccel& accel);

}  // namespace odd
