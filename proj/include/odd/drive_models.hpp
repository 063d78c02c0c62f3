#pragma once

#include <array>

#include "odd/error.hpp"

namespace odd {

using Vec4 = std::array<double, 4>;
using Mat4 = std::array<Vec4, 4>;

Vec4 operator*(const Mat4& m, const Vec4& v) noexcept;
Mat4 operator*(const Mat4& a, const Mat4& b) noexcept;

/// Distance between the left and right wheel-group centers, in meters.
/// Construction rejects non-positive and non-finite values.
class Spacing {
 public:
  explicit Spacing(double meters);

  double meters() const noexcept { return meters_; }

 private:
  double meters_;
};

struct DdWheelRates {
  double x_dot_left = 0.0;
  double x_dot_right = 0.0;
};

struct DdTwist {
  double x_dot = 0.0;
  double phi_dot = 0.0;
};

/// Body-frame linear rates of the two wheel-group centers L and R.
struct GroupRates {
  double x_dot_left = 0.0;
  double y_dot_left = 0.0;
  double x_dot_right = 0.0;
  double y_dot_right = 0.0;

  Vec4 as_vec() const noexcept { return {x_dot_left, y_dot_left, x_dot_right, y_dot_right}; }
  static GroupRates from_vec(const Vec4& v) noexcept { return {v[0], v[1], v[2], v[3]}; }
};

struct BodyTwist {
  double x_dot = 0.0;
  double y_dot = 0.0;
  double phi_dot = 0.0;
};

/// Body twist extended with the spacing rate d_dot.
struct OddRate {
  double x_dot = 0.0;
  double y_dot = 0.0;
  double phi_dot = 0.0;
  double d_dot = 0.0;

  Vec4 as_vec() const noexcept { return {x_dot, y_dot, phi_dot, d_dot}; }
  static OddRate from_vec(const Vec4& v) noexcept { return {v[0], v[1], v[2], v[3]}; }
  BodyTwist twist() const noexcept { return {x_dot, y_dot, phi_dot}; }

  friend bool operator==(const OddRate&, const OddRate&) = default;
};

// Body frame convention: B_x forward, B_y toward the left group. L sits at
// +d/2 and R at -d/2 along B_y, so d_dot = y_dot_left - y_dot_right.

inline constexpr double kDefaultSlipTolerance = 1e-9;

DdTwist dd_forward(const DdWheelRates& wheels, Spacing d);
DdWheelRates dd_inverse(double x_dot, double phi_dot, Spacing d);

/// Fixed-spacing omnidirectional drive. Throws SlipInconsistency when the two
/// groups disagree on lateral speed by more than `slip_tolerance`.
BodyTwist od_forward(const GroupRates& groups, Spacing d,
                     double slip_tolerance = kDefaultSlipTolerance);
GroupRates od_inverse(const BodyTwist& twist, Spacing d);

OddRate odd_forward(const GroupRates& groups, Spacing d);
GroupRates odd_inverse(const OddRate& rate, Spacing d);

/// Group rates -> (x_dot, y_dot, phi_dot, d_dot).
Mat4 odd_forward_matrix(Spacing d);
/// (x_dot, y_dot, phi_dot, d_dot) -> group rates.
Mat4 odd_inverse_matrix(Spacing d);

}  // namespace odd
