#pragma once

#include <string>
#include <vector>

#include "pflow/config.hpp"

namespace pflow {

struct CheckResult {
  std::string name;
  bool pass = false;
  bool asserted = true;  // false: logged diagnostic, never fails the suite
  std::string detail;
};

/// Runs the invariant suites of the calculus, step, flow and oracle layers on
/// the configured problem plus fixed-seed randomized instances. Asserted
/// failures should fail the caller; non-asserted rows are diagnostics.
std::vector<CheckResult> run_invariant_suite(const RunConfig& cfg);

}  // namespace pflow
