#pragma once

#include <cstdint>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "pflow/flow.hpp"
#include "pflow/grid.hpp"
#include "pflow/step.hpp"

namespace pflow {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct DomainSpec {
  enum class Kind { Interval, Rectangle, Masked };
  Kind kind = Kind::Interval;
  double lx = 1.0, ly = 1.0;
  long nx = 63, ny = 63;
  std::string mask_file;
};

struct InitSpec {
  enum class Kind { Sine, Bump, Random, Mixture, File };
  Kind kind = Kind::Bump;
  long mode = 1;                // sine mode
  std::vector<double> coeffs;   // mixture coefficients for modes 1..K
  std::string path;             // snapshot file
};

/// Flat key=value configuration with dotted sections (domain.*, flow.*,
/// solver.*, output.*). Unknown keys are errors; overrides beat file values
/// which beat defaults.
struct RunConfig {
  DomainSpec domain;

  double p = 3.0;

  // Time stepping: either N (and T) for a fixed horizon, or tau (+max_steps)
  // for run-to-convergence. tau*N = T must hold when all three are given.
  double total_time = 0.0;  // 0 = unset
  long steps = 0;           // 0 = unset
  double tau = 0.0;         // 0 = unset (derived from T/N when those are set)
  long max_steps = 20000;
  bool horizon_mode = false;  // true when N or T was given

  double stop_tol = 1e-8;
  int stop_window = 10;
  double zero_threshold = 1e-13;
  int record_every = 1;

  double tol_inner = 1e-10;
  long max_inner_iters = 50000;

  InitSpec init;
  std::uint64_t seed = 0;

  std::string out_dir = "pflow_out";
  std::string prefix;
  long snapshot_every = 0;  // 0 = final snapshot only
};

/// Parses `path` (empty = defaults only) and applies key=value overrides.
RunConfig parse_config(const std::string& path, const std::vector<std::string>& overrides = {});

/// Overrides applied to an existing config (used for --set).
void apply_override(RunConfig& cfg, const std::string& key, const std::string& value);

std::shared_ptr<const Grid> build_grid(const RunConfig& cfg);
GridFunction build_initial_condition(const RunConfig& cfg, std::shared_ptr<const Grid> grid);

/// Smooth positive bump, zero at the boundary, peak 1 at the center.
GridFunction bump_function(std::shared_ptr<const Grid> grid);

/// Seeded uniform(-1, 1) node values.
GridFunction random_function(std::shared_ptr<const Grid> grid, std::uint64_t seed);

FlowConfig make_flow_config(const RunConfig& cfg);
StepConfig make_step_config(const RunConfig& cfg);

}  // namespace pflow
