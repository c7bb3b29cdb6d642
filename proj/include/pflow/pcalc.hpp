#pragma once

#include <memory>
#include <span>
#include <vector>

#include "pflow/grid.hpp"

namespace pflow {

/// Flow exponent, restricted to [2, p_max]. p < 2 is out of scope: the
/// integrand |z|^p is not C^1 at the origin there.
class PExponent {
public:
  static constexpr double kDefaultMax = 200.0;

  explicit PExponent(double p, double p_max = kDefaultMax);

  double value() const { return p_; }
  double conjugate() const { return p_ / (p_ - 1.0); }

private:
  double p_;
};

/// J_p(w) = |w|^{p-2} w. Odd, strictly increasing, J_p(0) = 0.
double jp(double w, PExponent p);

/// Forward differences per gradient-stencil cell. In 1D the cells are the
/// n+1 edges; in 2D each node of the closed rectangle carries the forward
/// differences to its right and upper neighbor (values beyond the domain
/// are zero). Cell volume is the grid cell volume.
struct CellGradientField {
  std::shared_ptr<const Grid> grid;
  std::vector<double> gx;
  std::vector<double> gy;  // empty in 1D

  long num_cells() const { return static_cast<long>(gx.size()); }
  double cell_volume() const { return grid->cell_volume(); }
};

CellGradientField gradient(const GridFunction& u);

/// Discrete p-Dirichlet energy: sum over cells of vol * (1/p)|Du|^p.
double dirichlet_energy(const GridFunction& u, PExponent p);

/// Gradient of dirichlet_energy with respect to node values, i.e. the
/// discrete (-Delta_p u) times the cell volume. Entries at masked-out nodes
/// are zero (those nodes are not degrees of freedom).
GridFunction energy_gradient(const GridFunction& u, PExponent p);

/// R_p(u) = sum vol |Du|^p / sum vol |u|^p. Note the numerator is
/// p * dirichlet_energy(u, p); the 1/p factor of the energy must not leak
/// into the quotient. Throws on the zero function.
double rayleigh(const GridFunction& u, PExponent p);

namespace detail {
// Raw kernels over node-value arrays, shared with the inner step solver.
// Arrays must hold zeros at masked-out nodes.
double dirichlet_energy_raw(const Grid& g, std::span<const double> v, double p);

// Writes the energy gradient into `out` (zeroing masked-out entries) and, if
// non-null, stores its sup-norm in `sup_out`. `flux_sup_out` receives the
// largest individual flux contribution, i.e. the magnitude scale before the
// divergence cancellation; gradient entries carry rounding noise of a few
// ulp of that scale.
void energy_gradient_raw(const Grid& g, std::span<const double> v, double p,
                         std::span<double> out, double* sup_out,
                         double* flux_sup_out = nullptr);

// Cancellation-free differences for line searches: evaluating F(w + delta)
// and F(w) separately loses all digits once the decrease falls under the
// rounding of F, so these evaluate the difference itself via expm1/log1p.

// (s + ds)^{ph} - s^{ph} for s >= 0, s + ds >= 0.
double pow_half_diff(double s, double ds, double ph);

// Phi(w + delta) - Phi(w).
double dirichlet_energy_delta(const Grid& g, std::span<const double> w,
                              std::span<const double> delta, double p);

// lp_mass(u + delta) - lp_mass(u).
double lp_mass_delta(const Grid& g, std::span<const double> u, std::span<const double> delta,
                     double p);
}  // namespace detail

}  // namespace pflow
