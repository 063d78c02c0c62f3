#include "odd/drive_models.hpp"

#include <cmath>
#include <string>

namespace odd {

Vec4 operator*(const Mat4& m, const Vec4& v) noexcept {
  Vec4 out{};
  for (std::size_t i = 0; i < 4; ++i) {
    out[i] = m[i][0] * v[0] + m[i][1] * v[1] + m[i][2] * v[2] + m[i][3] * v[3];
  }
  return out;
}

Mat4 operator*(const Mat4& a, const Mat4& b) noexcept {
  Mat4 out{};
  for (std::size_t i = 0; i < 4; ++i) {
    for (std::size_t j = 0; j < 4; ++j) {
      out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j] + a[i][2] * b[2][j] + a[i][3] * b[3][j];
    }
  }
  return out;
}

Spacing::Spacing(double meters) : meters_(meters) {
  if (!(meters > 0.0) || !std::isfinite(meters)) {
    throw Error(ErrorCode::NonPositiveSpacing,
                "wheel-group spacing must be positive and finite, got " + std::to_string(meters));
  }
}

DdTwist dd_forward(const DdWheelRates& wheels, Spacing d) {
  return {(wheels.x_dot_left + wheels.x_dot_right) / 2.0,
          (wheels.x_dot_right - wheels.x_dot_left) / d.meters()};
}

DdWheelRates dd_inverse(double x_dot, double phi_dot, Spacing d) {
  const double half_span = d.meters() * phi_dot / 2.0;
  return {x_dot - half_span, x_dot + half_span};
}

BodyTwist od_forward(const GroupRates& groups, Spacing d, double slip_tolerance) {
  const double mismatch = std::abs(groups.y_dot_left - groups.y_dot_right);
  if (!(mismatch <= slip_tolerance)) {
    throw Error(ErrorCode::SlipInconsistency,
                "lateral group rates differ by " + std::to_string(mismatch) +
                    " m/s under fixed spacing");
  }
  return {(groups.x_dot_left + groups.x_dot_right) / 2.0,
          (groups.y_dot_left + groups.y_dot_right) / 2.0,
          (groups.x_dot_right - groups.x_dot_left) / d.meters()};
}

GroupRates od_inverse(const BodyTwist& twist, Spacing d) {
  return odd_inverse({twist.x_dot, twist.y_dot, twist.phi_dot, 0.0}, d);
}

OddRate odd_forward(const GroupRates& groups, Spacing d) {
  return {(groups.x_dot_left + groups.x_dot_right) / 2.0,
          (groups.y_dot_left + groups.y_dot_right) / 2.0,
          (groups.x_dot_right - groups.x_dot_left) / d.meters(),
          groups.y_dot_left - groups.y_dot_right};
}

GroupRates odd_inverse(const OddRate& rate, Spacing d) {
  const double half_span = d.meters() * rate.phi_dot / 2.0;
  const double half_spread = rate.d_dot / 2.0;
  return {rate.x_dot - half_span, rate.y_dot + half_spread,
          rate.x_dot + half_span, rate.y_dot - half_spread};
}

Mat4 odd_forward_matrix(Spacing d) {
  const double inv_d = 1.0 / d.meters();
  return {{{0.5, 0.0, 0.5, 0.0},
           {0.0, 0.5, 0.0, 0.5},
           {-inv_d, 0.0, inv_d, 0.0},
           {0.0, 1.0, 0.0, -1.0}}};
}

Mat4 odd_inverse_matrix(Spacing d) {
  const double half_d = d.meters() / 2.0;
  return {{{1.0, 0.0, -half_d, 0.0},
           {0.0, 1.0, 0.0, 0.5},
           {1.0, 0.0, half_d, 0.0},
           {0.0, 1.0, 0.0, -0.5}}};
}

}  // namespace odd
