#pragma once

#include <stdexcept>
#include <string>

#include "pflow/grid.hpp"
#include "pflow/pcalc.hpp"

namespace pflow {

struct StepConfig {
  double tau = 0.0;             // time step, > 0
  double tol_inner = 1e-10;     // relative gradient-norm stopping tolerance
  long max_inner_iters = 50000;
};

struct StepResult {
  GridFunction v_new;
  long inner_iters = 0;
  double residual = 0.0;     // relative EL residual at acceptance
  double dissipation = 0.0;  // sum vol |v_new - v_prev|^p / tau^{p-1}
};

class SolverError : public std::runtime_error {
public:
  SolverError(const std::string& msg, double residual)
      : std::runtime_error(msg), residual_(residual) {}
  double residual() const { return residual_; }

private:
  double residual_;
};

/// Step functional I(w) = tau * sum vol (1/p)|(w - v_prev)/tau|^p + Phi(w).
/// Strictly convex; its critical-point equation is the implicit scheme
/// J_p((w - v_prev)/tau) = Delta_p w.
double step_functional(const GridFunction& w, const GridFunction& v_prev, double tau,
                       PExponent p);

/// Sup-norm of vol*J_p((w - v_prev)/tau) + energy_gradient(w), normalized by
/// max(1, sup-norm of the same expression at w = v_prev).
double el_residual(const GridFunction& w, const GridFunction& v_prev, double tau, PExponent p);

/// One implicit time step: minimizes the step functional by gradient descent
/// with Barzilai-Borwein step proposals and Armijo backtracking, starting
/// from v_prev. Throws SolverError on non-convergence.
StepResult implicit_step(const GridFunction& v_prev, const StepConfig& cfg, PExponent p);

/// Same, but with an explicit inner starting iterate.
StepResult implicit_step(const GridFunction& v_prev, const StepConfig& cfg, PExponent p,
                         const GridFunction& start);

}  // namespace pflow
