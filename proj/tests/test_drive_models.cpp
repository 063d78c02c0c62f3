#include <doctest.h>

#include <cmath>
#include <random>

#include "odd/drive_models.hpp"

using namespace odd;
using doctest::Approx;

namespace {

// Group rates from a body rate, by the rigid-body velocity of a point at
// lateral offset y: v = (x_dot - phi_dot * y, y_dot), plus the spacing rate
// split evenly between the groups.
GroupRates groups_by_hand(const OddRate& r, double d) {
  return {r.x_dot - r.phi_dot * d / 2, r.y_dot + r.d_dot / 2, r.x_dot + r.phi_dot * d / 2,
          r.y_dot - r.d_dot / 2};
}

void check_groups(const GroupRates& got, const GroupRates& want) {
  CHECK(got.x_dot_left == Approx(want.x_dot_left));
  CHECK(got.y_dot_left == Approx(want.y_dot_left));
  CHECK(got.x_dot_right == Approx(want.x_dot_right));
  CHECK(got.y_dot_right == Approx(want.y_dot_right));
}

void check_rate(const OddRate& got, const OddRate& want) {
  CHECK(got.x_dot == Approx(want.x_dot));
  CHECK(got.y_dot == Approx(want.y_dot));
  CHECK(got.phi_dot == Approx(want.phi_dot));
  CHECK(got.d_dot == Approx(want.d_dot));
}

}  // namespace

TEST_CASE("spacing rejects non-positive and non-finite values") {
  CHECK_THROWS_AS((void)Spacing(0.0), Error);
  CHECK_THROWS_AS((void)Spacing(-1.0), Error);
  CHECK_THROWS_AS((void)Spacing(NAN), Error);
  CHECK_THROWS_AS((void)Spacing(INFINITY), Error);
  try {
    Spacing bad(0.0);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::NonPositiveSpacing);
  }
}

TEST_CASE("differential drive forward") {
  DdTwist t = dd_forward({1, 1}, Spacing(0.5));
  CHECK(t.x_dot == Approx(1));
  CHECK(t.phi_dot == Approx(0));
  t = dd_forward({-1, 1}, Spacing(2));
  CHECK(t.x_dot == Approx(0));
  CHECK(t.phi_dot == Approx(1));
  t = dd_forward({0, 1}, Spacing(1));
  CHECK(t.x_dot == Approx(0.5));
  CHECK(t.phi_dot == Approx(1));
}

TEST_CASE("differential drive inverse") {
  DdWheelRates w = dd_inverse(1, 0, Spacing(0.5));
  CHECK(w.x_dot_left == Approx(1));
  CHECK(w.x_dot_right == Approx(1));
  w = dd_inverse(0, 1, Spacing(2));
  CHECK(w.x_dot_left == Approx(-1));
  CHECK(w.x_dot_right == Approx(1));
  w = dd_inverse(0.5, 1, Spacing(1));
  CHECK(w.x_dot_left == Approx(0));
  CHECK(w.x_dot_right == Approx(1));
}

TEST_CASE("omnidirectional drive forward and slip detection") {
  BodyTwist t = od_forward({1, 0, 1, 0}, Spacing(0.5));
  CHECK(t.x_dot == Approx(1));
  CHECK(t.y_dot == Approx(0));
  CHECK(t.phi_dot == Approx(0));
  t = od_forward({0, 1, 0, 1}, Spacing(0.5));
  CHECK(t.y_dot == Approx(1));
  try {
    od_forward({0, 1, 0, -1}, Spacing(0.5));
    FAIL("expected SlipInconsistency");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::SlipInconsistency);
  }
  CHECK_NOTHROW(od_forward({0, 1, 0, 1 + 1e-12}, Spacing(0.5)));
}

TEST_CASE("omnidirectional drive inverse") {
  check_groups(od_inverse({1, 0, 0}, Spacing(1)), {1, 0, 1, 0});
  check_groups(od_inverse({0, 0, 1}, Spacing(2)), {-1, 0, 1, 0});
  check_groups(od_inverse({1, 1, 0}, Spacing(0.4)), {1, 1, 1, 1});
}

TEST_CASE("odd forward") {
  check_rate(odd_forward({1, 0, 1, 0}, Spacing(0.5)), {1, 0, 0, 0});
  check_rate(odd_forward({0, 1, 0, -1}, Spacing(0.5)), {0, 0, 0, 2});
  check_rate(odd_forward({-1, 0, 1, 0}, Spacing(2)), {0, 0, 1, 0});
}

TEST_CASE("odd inverse") {
  check_groups(odd_inverse({1, 0, 0, 0}, Spacing(0.5)), {1, 0, 1, 0});
  check_groups(odd_inverse({0, 0, 0, 2}, Spacing(0.5)), {0, 1, 0, -1});
  check_groups(odd_inverse({0, 1, 1, 0}, Spacing(1)), {-0.5, 1, 0.5, 1});
}

TEST_CASE("odd inverse matches rigid-body point velocities") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(-4, 4);
  for (int k = 0; k < 200; ++k) {
    const OddRate r{u(rng), u(rng), u(rng), u(rng)};
    const double d = 0.1 + std::abs(u(rng));
    check_groups(odd_inverse(r, Spacing(d)), groups_by_hand(r, d));
  }
}

TEST_CASE("odd matrices are mutual inverses") {
  for (double d : {1e-3, 0.05, 0.4, 1.0, 10.0}) {
    const Mat4 p = odd_forward_matrix(Spacing(d)) * odd_inverse_matrix(Spacing(d));
    for (int i = 0; i < 4; ++i) {
      for (int j = 0; j < 4; ++j) CHECK(std::abs(p[i][j] - (i == j ? 1.0 : 0.0)) < 1e-12);
    }
  }
}

TEST_CASE("odd reduces to omnidirectional drive at constant spacing") {
  const OddRate r{0.3, -0.2, 0.7, 0.0};
  const GroupRates g = odd_inverse(r, Spacing(0.6));
  const BodyTwist t = od_forward(g, Spacing(0.6));
  CHECK(t.x_dot == Approx(r.x_dot));
  CHECK(t.y_dot == Approx(r.y_dot));
  CHECK(t.phi_dot == Approx(r.phi_dot));
}

TEST_CASE("odd reduces to differential drive without lateral motion") {
  const DdWheelRates w = dd_inverse(0.4, 0.9, Spacing(0.5));
  const GroupRates g = odd_inverse({0.4, 0, 0.9, 0}, Spacing(0.5));
  CHECK(g.x_dot_left == Approx(w.x_dot_left));
  CHECK(g.x_dot_right == Approx(w.x_dot_right));
}
