#include "odd/mecanum_rig.hpp"

#include <cmath>
#include <string>

namespace odd {

void RigGeometry::validate() const {
  if (!(r > 0.0) || !(w > 0.0) || !std::isfinite(r) || !std::isfinite(w)) {
    throw Error(ErrorCode::InvalidGeometry, "wheel radius and group width must be positive");
  }
  if (!(d_min > 0.0) || !(d_min <= d_max) || !std::isfinite(d_max)) {
    throw Error(ErrorCode::InvalidGeometry, "spacing limits must satisfy 0 < d_min <= d_max");
  }
  for (std::size_t i = 0; i < alpha.size(); ++i) {
    if (!(std::abs(std::cos(alpha[i])) > kRollerCosEps)) {
      throw Error(ErrorCode::DegenerateRoller,
                  "roller of wheel " + std::to_string(i + 1) + " is perpendicular to B_x");
    }
  }
}

std::array<double, 4> RigGeometry::tangents() const noexcept {
  return {std::tan(alpha[0]), std::tan(alpha[1]), std::tan(alpha[2]), std::tan(alpha[3])};
}

SigmaTerms sigma_terms(const RigGeometry& geom, Spacing spacing) {
  const auto [t1, t2, t3, t4] = geom.tangents();
  const double d = spacing.meters();
  const double w = geom.w;
  return {
      t1 * t3 * d - t1 * t4 * (d - w) - t2 * t3 * (d + w) + t2 * t4 * d,
      2.0 * d + w,
      2.0 * d - w,
      d - w,
      d + w,
  };
}

double singularity_metric(const RigGeometry& geom, Spacing d) {
  return sigma_terms(geom, d).sigma1;
}

namespace {

SigmaTerms checked_sigma(const RigGeometry& geom, Spacing d) {
  const SigmaTerms s = sigma_terms(geom, d);
  if (!(std::abs(s.sigma1) >= kSingularEps)) {
    throw Error(ErrorCode::SingularConfiguration,
                "sigma1 = " + std::to_string(s.sigma1) + " at d = " + std::to_string(d.meters()));
  }
  return s;
}

Mat4 scaled(Mat4 m, double k) {
  for (auto& row : m) {
    for (double& x : row) x *= k;
  }
  return m;
}

}  // namespace

Mat4 group_velocity_matrix(const RigGeometry& geom, Spacing spacing) {
  geom.validate();
  const SigmaTerms s = checked_sigma(geom, spacing);
  const auto [t1, t2, t3, t4] = geom.tangents();
  const double d = spacing.meters();
  const double w = geom.w;
  const Mat4 m{{
      {-t2 * t3 * s.sigma2 + t2 * t4 * s.sigma3, t1 * t3 * s.sigma2 - t1 * t4 * s.sigma3,
       t4 * t1 * w + t4 * t2 * w, -t3 * t1 * w - t3 * t2 * w},
      {2.0 * (t3 * d - t4 * s.sigma4), -2.0 * (t3 * s.sigma5 - t4 * d), -2.0 * t4 * w,
       2.0 * t3 * w},
      {-t2 * t3 * w - t2 * t4 * w, t1 * t3 * w + t1 * t4 * w,
       -t4 * t1 * s.sigma3 + t4 * t2 * s.sigma2, t3 * t1 * s.sigma3 - t3 * t2 * s.sigma2},
      {2.0 * t2 * w, -2.0 * t1 * w, 2.0 * (t1 * d - t2 * s.sigma5),
       -2.0 * (t1 * s.sigma4 - t2 * d)},
  }};
  return scaled(m, geom.r / (2.0 * s.sigma1));
}

Mat4 rig_kinematic_matrix(const RigGeometry& geom, Spacing spacing) {
  geom.validate();
  const SigmaTerms s = checked_sigma(geom, spacing);
  const auto [t1, t2, t3, t4] = geom.tangents();
  const double d = spacing.meters();
  const double w = geom.w;
  const Mat4 m{{
      {-t2 * t3 * s.sigma5 + t2 * t4 * s.sigma4, t1 * t3 * s.sigma5 - t1 * t4 * s.sigma4,
       -t4 * t1 * s.sigma4 + t4 * t2 * s.sigma5, t3 * t1 * s.sigma4 - t3 * t2 * s.sigma5},
      {t2 * w + t3 * d - t4 * s.sigma4, -t1 * w - t3 * s.sigma5 + t4 * d,
       t1 * d - t2 * s.sigma5 - t4 * w, -t1 * s.sigma4 + t2 * d + t3 * w},
      {2.0 * t2 * (t3 - t4), 2.0 * t1 * (-t3 + t4), 2.0 * t4 * (-t1 + t2), 2.0 * t3 * (t1 - t2)},
      {2.0 * (-t2 * w + t3 * d - t4 * s.sigma4), 2.0 * (t1 * w - t3 * s.sigma5 + t4 * d),
       2.0 * (-t1 * d + t2 * s.sigma5 - t4 * w), 2.0 * (t1 * s.sigma4 - t2 * d + t3 * w)},
  }};
  return scaled(m, geom.r / (2.0 * s.sigma1));
}

WheelSpeeds inverse_kinematics(const RigGeometry& geom, Spacing d, const OddRate& rate) {
  geom.validate();
  if (!geom.contains(d.meters())) {
    throw Error(ErrorCode::SpacingOutOfRange, "d = " + std::to_string(d.meters()) +
                                                  " outside [" + std::to_string(geom.d_min) +
                                                  ", " + std::to_string(geom.d_max) + "]");
  }
  const GroupRates g = odd_inverse(rate, d);
  const auto t = geom.tangents();
  const double half_w = geom.w / 2.0;
  // Each wheel's rim constraint, divided through by cos(alpha_i); wheels sit
  // at +w/2 and -w/2 along B_y from their group center, and every group turns
  // with the common body yaw rate.
  return {
      (g.x_dot_left + t[0] * g.y_dot_left - half_w * rate.phi_dot) / geom.r,
      (g.x_dot_left + t[1] * g.y_dot_left + half_w * rate.phi_dot) / geom.r,
      (g.x_dot_right + t[2] * g.y_dot_right - half_w * rate.phi_dot) / geom.r,
      (g.x_dot_right + t[3] * g.y_dot_right + half_w * rate.phi_dot) / geom.r,
  };
}

GroupRates group_velocities_from_wheels(const RigGeometry& geom, Spacing d,
                                        const WheelSpeeds& wheels) {
  return GroupRates::from_vec(group_velocity_matrix(geom, d) * wheels);
}

OddRate forward_kinematics(const RigGeometry& geom, Spacing d, const WheelSpeeds& wheels) {
  return OddRate::from_vec(rig_kinematic_matrix(geom, d) * wheels);
}

}  // namespace odd
