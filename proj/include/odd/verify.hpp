#pragma once

#include <functional>
#include <string>
#include <vector>

#include "odd/config.hpp"

namespace odd {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

struct VerifyOptions {
  std::uint64_t seed = 20240607;
  /// Length of the live service session; the acceptance bound is stated for 60 s.
  double service_seconds = 60.0;
  bool include_service = true;
};

/// Ground incline of 0.5 deg plus a 5 % left/right mass asymmetry, on a
/// ground with rolling resistance (matches config/incline_asymmetry.cfg).
SimConfig disturbance_scenario();

CheckResult check_matrix_identities(const VerifyOptions& options);
CheckResult check_oracle_equivalence(const VerifyOptions& options);
CheckResult check_kinematic_roundtrips(const VerifyOptions& options);
CheckResult check_dynamics(const VerifyOptions& options);
CheckResult check_circle_closure(const VerifyOptions& options);
CheckResult check_loop_closure(const VerifyOptions& options);
CheckResult check_disturbance_ordering(const VerifyOptions& options);
CheckResult check_closed_loop_control(const VerifyOptions& options);
CheckResult check_determinism(const VerifyOptions& options);
CheckResult check_service_contract(const VerifyOptions& options);

/// Runs every check in order, calling `report` as each one finishes.
std::vector<CheckResult> run_verification(const VerifyOptions& options,
                                          const std::function<void(const CheckResult&)>& report = {});

}  // namespace odd
