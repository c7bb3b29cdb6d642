#pragma once

#include <memory>
#include <string>
#include <vector>

#include "pflow/grid.hpp"
#include "pflow/pcalc.hpp"
#include "pflow/step.hpp"

namespace pflow {

struct FlowConfig {
  double total_time = 0.0;      // T; 0 = unset (bookkeeping only, tau lives in StepConfig)
  long steps = 0;               // N; > 0 fixes the horizon at N steps
  long max_steps = 100000;
  double stop_tol = 1e-8;       // relative Rayleigh change per unit time
  int stop_window = 10;
  double zero_threshold = 1e-13;
  int record_every = 1;
  bool run_to_horizon = false;  // disable the convergence stop, run all `steps`
  bool keep_iterates = false;   // store v^0..v^K in the trajectory
};

struct DiagnosticsRecord {
  long k = 0;
  double t = 0;
  double mass = 0;             // sum vol |v^k|^p
  double energy = 0;           // Phi(v^k)
  double rayleigh = 0;         // p*energy/mass (0 for the zero function)
  double lambda_hat = 0;       // running Rayleigh value
  double mu_hat = 0;           // mass-decay rate estimate (window average)
  double rescaled_energy = 0;  // exp(p*mu_hat*t) * p * energy
  double dissipation_cum = 0;  // sum_{j<=k} sum vol |v^j - v^{j-1}|^p / tau^{p-1}
  double vt_sup = 0;           // sup |v^k - v^{k-1}| / tau
};

enum class FlowStatus { Converged, DegenerateZero, HorizonReached, MaxStepsReached };

const char* to_string(FlowStatus s);

struct FlowTrajectory {
  std::shared_ptr<const Grid> grid;
  double p = 0;
  FlowConfig cfg;
  StepConfig step_cfg;
  std::vector<DiagnosticsRecord> records;
  std::vector<GridFunction> iterates;  // only when cfg.keep_iterates
  GridFunction final_v;
  FlowStatus status = FlowStatus::MaxStepsReached;
  long steps_used = 0;
  double phi_g = 0;         // Phi of the initial condition
  double max_step_gap = 0;  // max_k sum vol |v^k - v^{k-1}|^p
};

struct RateEstimate {
  double lambda_hat = 0;
  double mu_hat = 0;
  double consistency = 0;  // |mu_hat - lambda_hat^{1/(p-1)}| / mu_hat
};

struct GroundStateResult {
  GridFunction psi;            // unit lp_mass, positive at the node of max |value|
  double lambda_p = 0;
  double mu_p = 0;             // lambda_p^{1/(p-1)}
  bool converged = false;
  bool degenerate_zero = false;
  long steps_used = 0;
};

/// Iterates the implicit scheme from v^0 = g, recording diagnostics.
/// Terminates by the convergence criterion (Rayleigh flat over the stop
/// window and normalized-iterate Cauchy condition), by zero detection
/// (rescaled mass below zero_threshold for stop_window consecutive steps),
/// by the fixed horizon, or by max_steps.
FlowTrajectory run_flow(const GridFunction& g, PExponent p, const FlowConfig& cfg,
                        const StepConfig& step_cfg);

/// lambda_hat = last Rayleigh value; mu_hat = -(1/(p dt)) log(mass ratio)
/// averaged over the trailing window. The consistency gap between mu_hat and
/// lambda_hat^{1/(p-1)} is an accuracy certificate (biased O(tau)).
RateEstimate estimate_rates(const FlowTrajectory& traj, PExponent p);

/// Final iterate normalized to unit lp_mass with the sign fixed so that the
/// first node of maximal |value| is positive. Requires a trajectory that
/// terminated by the stop criterion (or degenerately).
GroundStateResult extract_ground_state(const FlowTrajectory& traj, PExponent p,
                                       const FlowConfig& cfg);

/// Runs k_steps of the flow from a computed ground state and returns the
/// maximal relative sup-distance between v^k and c_k * psi where
/// c_k = lp_mass(v^k)^{1/p}. Zero means the spatial shape is invariant and
/// only the amplitude decays.
double check_separation_of_variables(const GroundStateResult& gs, PExponent p, double tau,
                                     long k_steps);

/// C = (sup |energy_gradient(g)| / vol)^{1/(p-1)} bounds |v_t| for the
/// continuum flow; returns whether vt_sup <= C (1 + 1e-6) held on every
/// recorded step. Reported as a diagnostic, not asserted.
bool check_vt_bound(const FlowTrajectory& traj, const GridFunction& g, PExponent p);

/// max_k sum vol |v^k - v^{k-1}|^p; callers compare against
/// tau^{p-1} * p * Phi(g), the step-vs-linear interpolant distance bound.
double interpolant_gap(const FlowTrajectory& traj, PExponent p, double tau);

/// CSV with header k,t,mass,energy,rayleigh,lambda_hat,mu_hat,
/// rescaled_energy,dissipation_cum,vt_sup; one row per record.
void write_timeseries_csv(const std::string& path, const FlowTrajectory& traj);

}  // namespace pflow
