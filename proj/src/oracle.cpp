#include "pflow/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>
#include <vector>

namespace pflow {

namespace {

void require_unmasked(const Grid& g) {
  if (!g.fully_active()) throw std::invalid_argument("spectral oracle requires an unmasked grid");
}

double axis_eigenvalue(double h, long n, long m) {
  if (m < 1 || m > n) throw std::invalid_argument("mode index out of range");
  // (2/h^2)(1 - cos(m pi h / L)) with h/L = 1/(n+1)
  const double angle = static_cast<double>(m) * std::numbers::pi / static_cast<double>(n + 1);
  return 2.0 / (h * h) * (1.0 - std::cos(angle));
}

// S[m][i] = sin((m+1)(i+1) pi/(n+1)); symmetric, S*S = ((n+1)/2) I.
std::vector<double> sine_table(long n) {
  std::vector<double> s(static_cast<std::size_t>(n * n));
  for (long m = 0; m < n; ++m) {
    for (long i = 0; i < n; ++i) {
      s[static_cast<std::size_t>(m * n + i)] =
          std::sin(static_cast<double>((m + 1) * (i + 1)) * std::numbers::pi /
                   static_cast<double>(n + 1));
    }
  }
  return s;
}

void apply_sine_rows(const std::vector<double>& table, long n, long rows,
                     const std::vector<double>& in, std::vector<double>& out) {
  // out[r*n + m] = sum_i in[r*n + i] * S[m][i], for each row r
  for (long r = 0; r < rows; ++r) {
    for (long m = 0; m < n; ++m) {
      double acc = 0.0;
      const double* srow = table.data() + m * n;
      const double* irow = in.data() + r * n;
      for (long i = 0; i < n; ++i) acc += irow[i] * srow[i];
      out[static_cast<std::size_t>(r * n + m)] = acc;
    }
  }
}

}  // namespace

double eigenvalue_closed_form(const Grid& grid, long mx, long my) {
  require_unmasked(grid);
  double lam = axis_eigenvalue(grid.hx(), grid.nx(), mx);
  if (grid.dim() == 2) lam += axis_eigenvalue(grid.hy(), grid.ny(), my);
  return lam;
}

double smallest_eigenvalue_closed_form(const Grid& grid) {
  return eigenvalue_closed_form(grid, 1, 1);
}

GridFunction sine_mode(std::shared_ptr<const Grid> grid, long mx, long my) {
  require_unmasked(*grid);
  const long nx = grid->nx();
  std::vector<double> vals(static_cast<std::size_t>(grid->num_nodes()));
  if (grid->dim() == 1) {
    if (mx < 1 || mx > nx) throw std::invalid_argument("mode index out of range");
    for (long i = 0; i < nx; ++i) {
      vals[static_cast<std::size_t>(i)] = std::sin(
          static_cast<double>(mx * (i + 1)) * std::numbers::pi / static_cast<double>(nx + 1));
    }
  } else {
    const long ny = grid->ny();
    if (mx < 1 || mx > nx || my < 1 || my > ny) {
      throw std::invalid_argument("mode index out of range");
    }
    for (long j = 0; j < ny; ++j) {
      const double sy = std::sin(static_cast<double>(my * (j + 1)) * std::numbers::pi /
                                 static_cast<double>(ny + 1));
      for (long i = 0; i < nx; ++i) {
        const double sx = std::sin(static_cast<double>(mx * (i + 1)) * std::numbers::pi /
                                   static_cast<double>(nx + 1));
        vals[static_cast<std::size_t>(j * nx + i)] = sx * sy;
      }
    }
  }
  return GridFunction(std::move(grid), std::move(vals));
}

GridFunction heat_flow_exact(const GridFunction& g, double tau, long k) {
  if (!g.valid()) throw std::invalid_argument("invalid grid function");
  const Grid& grid = g.grid();
  require_unmasked(grid);
  if (!(tau > 0.0)) throw std::invalid_argument("tau must be positive");
  if (k < 0) throw std::invalid_argument("k must be >= 0");

  const long nx = grid.nx();
  if (grid.dim() == 1) {
    const auto sx = sine_table(nx);
    std::vector<double> coeff(static_cast<std::size_t>(nx)), out(static_cast<std::size_t>(nx));
    std::vector<double> in(g.values().begin(), g.values().end());
    apply_sine_rows(sx, nx, 1, in, coeff);
    const double norm = 2.0 / static_cast<double>(nx + 1);
    for (long m = 0; m < nx; ++m) {
      const double lam = axis_eigenvalue(grid.hx(), nx, m + 1);
      coeff[static_cast<std::size_t>(m)] *=
          norm * std::pow(1.0 + tau * lam, -static_cast<double>(k));
    }
    apply_sine_rows(sx, nx, 1, coeff, out);
    return GridFunction(g.grid_ptr(), std::move(out));
  }

  const long ny = grid.ny();
  const auto sx = sine_table(nx);
  const auto sy = sine_table(ny);
  std::vector<double> a(g.values().begin(), g.values().end());
  std::vector<double> b(a.size());

  // transform along x (each of the ny rows), then along y (each column)
  apply_sine_rows(sx, nx, ny, a, b);
  std::vector<double> bt(a.size()), ct(a.size());
  for (long j = 0; j < ny; ++j) {
    for (long i = 0; i < nx; ++i) {
      bt[static_cast<std::size_t>(i * ny + j)] = b[static_cast<std::size_t>(j * nx + i)];
    }
  }
  apply_sine_rows(sy, ny, nx, bt, ct);  // ct[i*ny + my]

  const double norm = 4.0 / (static_cast<double>(nx + 1) * static_cast<double>(ny + 1));
  for (long i = 0; i < nx; ++i) {
    const double lx = axis_eigenvalue(grid.hx(), nx, i + 1);
    for (long j = 0; j < ny; ++j) {
      const double lam = lx + axis_eigenvalue(grid.hy(), ny, j + 1);
      ct[static_cast<std::size_t>(i * ny + j)] *=
          norm * std::pow(1.0 + tau * lam, -static_cast<double>(k));
    }
  }

  // inverse: same transforms, no normalization
  apply_sine_rows(sy, ny, nx, ct, bt);  // bt[i*ny + j]
  for (long j = 0; j < ny; ++j) {
    for (long i = 0; i < nx; ++i) {
      b[static_cast<std::size_t>(j * nx + i)] = bt[static_cast<std::size_t>(i * ny + j)];
    }
  }
  apply_sine_rows(sx, nx, ny, b, a);
  return GridFunction(g.grid_ptr(), std::move(a));
}

GroundStateResult rayleigh_minimize(std::shared_ptr<const Grid> grid, PExponent p,
                                    std::uint64_t seed, double tol, long max_iters) {
  if (!grid) throw std::invalid_argument("null grid");
  if (!(tol > 0.0)) throw std::invalid_argument("tol must be positive");
  const Grid& g = *grid;
  const double pv = p.value();
  const double vol = g.cell_volume();
  const auto n = static_cast<std::size_t>(g.num_nodes());

  // positive-biased random start on the active nodes
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(0.5, 1.5);
  std::vector<double> u(n, 0.0);
  for (long i = 0; i < g.num_nodes(); ++i) {
    const double x = dist(rng);
    if (g.active(i)) u[static_cast<std::size_t>(i)] = x;
  }

  auto normalize = [&](std::vector<double>& w) {
    const double m = detail::lp_mass_raw(g, w, pv);
    const double c = std::pow(m, 1.0 / pv);
    for (auto& x : w) x /= c;
  };
  normalize(u);

  std::vector<double> egrad(n), resid(n), resid_trial(n), trial(n), delta(n), dw(n), dg(n);

  auto eval = [&](const std::vector<double>& w, std::vector<double>& out_resid, double& out_ray,
                  double& out_sup, double& out_scale, double& out_mass) {
    // residual of the first-order condition on the unit-mass sphere:
    // E = grad(p Phi) - R * grad(mass), with R the Rayleigh quotient
    detail::energy_gradient_raw(g, w, pv, egrad, nullptr);
    const double mass = detail::lp_mass_raw(g, w, pv);
    const double phi = detail::dirichlet_energy_raw(g, w, pv);
    out_ray = pv * phi / mass;
    out_mass = mass;
    double sup = 0.0, supj = 0.0;
    for (long i = 0; i < g.num_nodes(); ++i) {
      auto idx = static_cast<std::size_t>(i);
      if (!g.active(i)) {
        out_resid[idx] = 0.0;
        continue;
      }
      const double x = w[idx];
      const double jx = (pv == 2.0) ? x : std::pow(std::fabs(x), pv - 2.0) * x;
      out_resid[idx] = pv * egrad[idx] - out_ray * pv * vol * jx;
      sup = std::max(sup, std::fabs(out_resid[idx]));
      supj = std::max(supj, std::fabs(jx));
    }
    out_sup = sup;
    out_scale = out_ray * pv * vol * supj;
  };

  double ray = 0.0, sup = 0.0, scl = 0.0, mass_u = 1.0;
  eval(u, resid, ray, sup, scl, mass_u);
  double alpha = 0.1 / std::max(ray, 1.0);
  bool have_pair = false;
  int stagnant = 0;
  long iter = 0;
  for (; iter < max_iters; ++iter) {
    if (sup <= tol * std::max(scl, 1e-300)) break;

    if (have_pair) {
      double ss = 0.0, sy = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        ss += dw[i] * dw[i];
        sy += dw[i] * dg[i];
      }
      alpha = (sy > 0.0 && std::isfinite(sy) && ss > 0.0) ? ss / sy : alpha * 2.0;
      alpha = std::clamp(alpha, 1e-300, 1e300);
    }

    double rr = 0.0;
    for (std::size_t i = 0; i < n; ++i) rr += resid[i] * resid[i];

    // Armijo on the directly-evaluated Rayleigh decrease; R is scale
    // invariant, so the unnormalized trial u - a*E has the same quotient.
    double a = alpha;
    bool accepted = false;
    bool strict = false;
    double a_tie = 0.0;
    for (int bt = 0; bt < 120; ++bt) {
      for (std::size_t i = 0; i < n; ++i) delta[i] = -a * resid[i];
      const double d_phi = detail::dirichlet_energy_delta(g, u, delta, pv);
      const double d_mass = detail::lp_mass_delta(g, u, delta, pv);
      const double d_ray = (pv * d_phi - ray * d_mass) / (mass_u + d_mass);
      if (std::isfinite(d_ray)) {
        if (d_ray <= -1e-6 * a * rr) {
          accepted = true;
          strict = true;
          break;
        }
        if (a_tie == 0.0 && d_ray <= 0.0) a_tie = a;
      }
      a *= 0.5;
    }
    if (!strict && a_tie > 0.0) a = a_tie;
    accepted = accepted || (a_tie > 0.0);
    stagnant = strict ? 0 : stagnant + 1;
    if (!accepted || stagnant > 50) {
      throw SolverError("rayleigh_minimize: line search stagnated",
                        sup / std::max(scl, 1e-300));
    }
    double ray_t = 0.0, sup_t = 0.0, scl_t = 0.0, mass_t = 1.0;
    for (std::size_t i = 0; i < n; ++i) trial[i] = u[i] - a * resid[i];
    normalize(trial);
    eval(trial, resid_trial, ray_t, sup_t, scl_t, mass_t);
    for (std::size_t i = 0; i < n; ++i) {
      dw[i] = trial[i] - u[i];
      dg[i] = resid_trial[i] - resid[i];
    }
    have_pair = true;
    alpha = a;
    u.swap(trial);
    resid.swap(resid_trial);
    ray = ray_t;
    sup = sup_t;
    scl = scl_t;
    mass_u = mass_t;
  }
  if (iter >= max_iters) {
    throw SolverError("rayleigh_minimize: no convergence within max_iters",
                      sup / std::max(scl, 1e-300));
  }

  // sign convention: first node of maximal magnitude is positive
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (std::fabs(u[i]) > best) {
      best = std::fabs(u[i]);
      arg = i;
    }
  }
  if (u[arg] < 0.0) {
    for (auto& x : u) x = -x;
  }
  normalize(u);

  GroundStateResult res;
  res.psi = GridFunction(std::move(grid), std::move(u));
  res.lambda_p = rayleigh(res.psi, p);
  res.mu_p = std::pow(res.lambda_p, 1.0 / (pv - 1.0));
  res.converged = true;
  res.degenerate_zero = false;
  res.steps_used = iter;
  return res;
}

}  // namespace pflow
