#include <doctest.h>

#include <Eigen/Dense>

#include <random>

#include "odd/dynamics.hpp"

using namespace odd;
using doctest::Approx;

namespace {

const DynState kRest{{}, Spacing(1.0)};

Eigen::Vector4d as_vector(const WheelGroupForces& f) {
  return {f.fx_left, f.fy_left, f.fx_right, f.fy_right};
}

}  // namespace

TEST_CASE("mass pair rejects non-positive masses") {
  CHECK_THROWS_AS(MassPair(0.0, 1.0), Error);
  CHECK_THROWS_AS(MassPair(1.0, -2.0), Error);
  CHECK(MassPair(2.0, 3.0).total() == 5.0);
}

TEST_CASE("center of mass offset") {
  CHECK(center_of_mass_offset(MassPair(1, 1), Spacing(2)) == Approx(0));
  CHECK(center_of_mass_offset(MassPair(2, 1), Spacing(3)) == Approx(0.5));
  CHECK(center_of_mass_offset(MassPair(1, 2), Spacing(3)) == Approx(-0.5));
}

TEST_CASE("moment of inertia against two point masses") {
  CHECK(moment_of_inertia(MassPair(1, 1), Spacing(2)) == Approx(2));
  CHECK(moment_of_inertia(MassPair(1, 1), Spacing(4)) == Approx(8));
  CHECK(moment_of_inertia(MassPair(3, 1), Spacing(2)) == Approx(3));

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> u(0.1, 10.0);
  for (int k = 0; k < 500; ++k) {
    const double ml = u(rng), mr = u(rng), d = u(rng);
    const double yc = (ml * d / 2 - mr * d / 2) / (ml + mr);
    const double brute = ml * (yc - d / 2) * (yc - d / 2) + mr * (yc + d / 2) * (yc + d / 2);
    CHECK(std::abs(moment_of_inertia(MassPair(ml, mr), Spacing(d)) - brute) < 1e-12 * (1 + brute));
  }
}

TEST_CASE("pseudo-forces") {
  const MassPair unit(1, 1);
  SUBCASE("vanish without rotation") {
    const PseudoForces p = pseudo_forces(MassPair(3, 7), {{1.3, -2.1, 0.0, 0.4}, Spacing(0.7)});
    CHECK(p.coriolis_left == 0.0);
    CHECK(p.coriolis_right == 0.0);
    CHECK(p.centrifugal_left == 0.0);
    CHECK(p.centrifugal_right == 0.0);
  }
  SUBCASE("lateral motion while turning") {
    const PseudoForces p = pseudo_forces(unit, {{0, 1, 1, 0}, Spacing(1)});
    CHECK(p.coriolis_left == Approx(2));
    CHECK(p.coriolis_right == Approx(2));
    CHECK(p.centrifugal_left == Approx(-0.5));
    CHECK(p.centrifugal_right == Approx(0.5));
  }
  SUBCASE("forward motion while turning") {
    const PseudoForces p = pseudo_forces(unit, {{1, 0, 1, 0}, Spacing(1)});
    CHECK(p.centrifugal_left == Approx(0.5));
    CHECK(p.centrifugal_right == Approx(1.5));
    CHECK(p.coriolis_left == 0.0);
    CHECK(p.coriolis_right == 0.0);
  }
}

TEST_CASE("forward dynamics examples") {
  const MassPair unit(1, 1);
  OddAccel a = forward_dynamics(unit, kRest, {0.5, 0, 0.5, 0});
  CHECK(a.x_ddot == Approx(0.5));
  CHECK(a.y_ddot == Approx(0));
  CHECK(a.phi_ddot == Approx(0));
  CHECK(a.d_ddot == Approx(0));

  a = forward_dynamics(unit, kRest, {-1, 0, 1, 0});
  CHECK(a.phi_ddot == Approx(2));

  a = forward_dynamics(unit, kRest, {0, -1, 0, 1});
  CHECK(a.x_ddot == Approx(0));
  CHECK(a.y_ddot == Approx(0));
  CHECK(a.phi_ddot == Approx(0));
  CHECK(a.d_ddot == Approx(2));
}

TEST_CASE("inverse dynamics examples") {
  const MassPair unit(1, 1);
  WheelGroupForces f = inverse_dynamics(unit, kRest, {1, 0, 0, 0});
  CHECK(f.fx_left == Approx(1));
  CHECK(f.fx_right == Approx(1));
  CHECK(f.fy_left == Approx(0));
  CHECK(f.fy_right == Approx(0));

  f = inverse_dynamics(MassPair(2, 5), {{}, Spacing(0.3)}, {});
  CHECK(as_vector(f).isZero(0.0));

  f = inverse_dynamics(unit, kRest, {0, 0, 0, 2});
  CHECK(f.fy_left == Approx(-1));
  CHECK(f.fy_right == Approx(1));
}

TEST_CASE("forward dynamics equals a numeric solve of the inverse map") {
  // The inverse map is affine in the acceleration: probe its columns and
  // solve the 4x4 system for each applied force.
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-3, 3);
  std::uniform_real_distribution<double> mass(0.2, 15);
  for (int k = 0; k < 200; ++k) {
    const MassPair m(mass(rng), mass(rng));
    const DynState s{{u(rng), u(rng), u(rng), u(rng)}, Spacing(0.1 + std::abs(u(rng)))};
    const Eigen::Vector4d bias = as_vector(inverse_dynamics(m, s, {}));
    Eigen::Matrix4d cols;
    for (int j = 0; j < 4; ++j) {
      OddAccel e;
      (j == 0 ? e.x_ddot : j == 1 ? e.y_ddot : j == 2 ? e.phi_ddot : e.d_ddot) = 1.0;
      cols.col(j) = as_vector(inverse_dynamics(m, s, e)) - bias;
    }
    const WheelGroupForces f{u(rng), u(rng), u(rng), u(rng)};
    const Eigen::Vector4d want = cols.fullPivLu().solve(as_vector(f) - bias);
    const OddAccel got = forward_dynamics(m, s, f);
    CHECK(got.x_ddot == Approx(want[0]).epsilon(1e-9));
    CHECK(got.y_ddot == Approx(want[1]).epsilon(1e-9));
    CHECK(got.phi_ddot == Approx(want[2]).epsilon(1e-9));
    CHECK(got.d_ddot == Approx(want[3]).epsilon(1e-9));
  }
}

TEST_CASE("total forward force drives the center of mass") {
  const MassPair m(2, 3);
  const OddAccel a = forward_dynamics(m, {{}, Spacing(0.5)}, {1.0, 0.5, 4.0, -1.5});
  CHECK(a.x_ddot == Approx(5.0 / 5.0));
  CHECK(a.y_ddot == Approx(-1.0 / 5.0));
}
