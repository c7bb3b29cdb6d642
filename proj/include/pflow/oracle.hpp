#pragma once

#include <cstdint>
#include <memory>

#include "pflow/flow.hpp"
#include "pflow/grid.hpp"
#include "pflow/pcalc.hpp"

namespace pflow {

// Independent ground-truth generators: the p = 2 implicit step is the linear
// resolvent (I + tau*A)^{-1}, so on full intervals/rectangles the whole
// discrete-in-time evolution is exact in the sine eigenbasis of the 3-point /
// 5-point Dirichlet Laplacian.

/// Closed-form eigenvalue of the negative discrete Dirichlet Laplacian for
/// mode m (per axis, summed across axes in 2D):
/// lambda_m = (2/h^2)(1 - cos(m pi h / L)). Requires an unmasked grid.
double eigenvalue_closed_form(const Grid& grid, long mx, long my = 1);

/// Smallest eigenvalue (mode 1 per axis).
double smallest_eigenvalue_closed_form(const Grid& grid);

/// Samples of the discrete sine eigenvector sin(mx pi x/Lx) (times
/// sin(my pi y/Ly) in 2D). Exact eigenvector of the assembled operator.
GridFunction sine_mode(std::shared_ptr<const Grid> grid, long mx, long my = 1);

/// Exact solution of the p = 2 implicit scheme after k steps of size tau:
/// coefficient update g_m -> g_m (1 + tau lambda_m)^{-k}. Requires an
/// unmasked grid.
GridFunction heat_flow_exact(const GridFunction& g, double tau, long k);

/// Direct minimization of the p-Rayleigh quotient over nonzero grid
/// functions, independent of the flow: projected gradient on the unit
/// lp_mass sphere with Barzilai-Borwein steps and an Armijo safeguard,
/// deterministic positive-biased random initialization from `seed`.
/// Stops when the first-order-condition residual
/// ||(-Delta_p u) - lambda J_p(u)|| is below tol in relative sup-norm.
GroundStateResult rayleigh_minimize(std::shared_ptr<const Grid> grid, PExponent p,
                                    std::uint64_t seed, double tol, long max_iters = 200000);

}  // namespace pflow
