#pragma once

#include <string>
#include <vector>

#include "pflow/config.hpp"

namespace pflow::cli {

// Exit codes: 0 success, 1 usage/config error, 2 solver failure,
// 3 invariant violation.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitSolver = 2;
inline constexpr int kExitInvariant = 3;

struct SweepRow {
  double p = 0;
  double lambda_p = 0;
  double lambda_root = 0;  // lambda_p^{1/p}
  double mu_p = 0;
  bool converged = false;
  long steps = 0;
};

struct SweepResult {
  std::vector<SweepRow> rows;  // sorted by p
};

/// Ground-state runs for each p, warm-started from the previous p's psi.
SweepResult run_sweep(const RunConfig& cfg, std::vector<double> p_list);

int cmd_flow(const RunConfig& cfg);
int cmd_groundstate(const RunConfig& cfg);
int cmd_sweep(const RunConfig& cfg, const std::vector<double>& p_list);
int cmd_check(const RunConfig& cfg);

}  // namespace pflow::cli
