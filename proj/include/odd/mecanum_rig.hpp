#pragma once

#include <array>
#include <numbers>

#include "odd/drive_models.hpp"

namespace odd {

inline constexpr double kSingularEps = 1e-6;
inline constexpr double kRollerCosEps = 1e-6;

/// Geometry of the collinear four-Mecanum prototype. Wheels are numbered
/// 1..4 from left to right (indices 0..3 here); wheels 1-2 form the left
/// group, 3-4 the right group.
struct RigGeometry {
  double r = 0.05;  ///< wheel radius [m]
  double w = 0.2;   ///< spacing of the two wheels inside a group [m]
  /// Roller axis angle of each wheel relative to B_x [rad].
  std::array<double, 4> alpha{-std::numbers::pi / 4, std::numbers::pi / 4,
                              std::numbers::pi / 4, -std::numbers::pi / 4};
  double d_min = 0.25;
  double d_max = 0.8;

  /// Throws InvalidGeometry or DegenerateRoller.
  void validate() const;
  bool contains(double d) const noexcept { return d >= d_min && d <= d_max; }
  std::array<double, 4> tangents() const noexcept;
};

using WheelSpeeds = std::array<double, 4>;

struct SigmaTerms {
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double sigma3 = 0.0;
  double sigma4 = 0.0;
  double sigma5 = 0.0;
};

SigmaTerms sigma_terms(const RigGeometry& geom, Spacing d);

/// Returns sigma1; |sigma1| < kSingularEps marks a singular configuration.
double singularity_metric(const RigGeometry& geom, Spacing d);

/// Wheel speeds -> group rates (x_dot_L, y_dot_L, x_dot_R, y_dot_R).
Mat4 group_velocity_matrix(const RigGeometry& geom, Spacing d);

/// Wheel speeds -> (x_dot, y_dot, phi_dot, d_dot).
Mat4 rig_kinematic_matrix(const RigGeometry& geom, Spacing d);

WheelSpeeds inverse_kinematics(const RigGeometry& geom, Spacing d, const OddRate& rate);
GroupRates group_velocities_from_wheels(const RigGeometry& geom, Spacing d,
                                        const WheelSpeeds& wheels);
OddRate forward_kinematics(const RigGeometry& geom, Spacing d, const WheelSpeeds& wheels);

}  // namespace odd
