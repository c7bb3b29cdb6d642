#include "pflow/pcalc.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pflow {

PExponent::PExponent(double p, double p_max) : p_(p) {
  if (!std::isfinite(p) || p < 2.0 || p > p_max) {
    throw std::invalid_argument("p out of supported range [2, p_max]");
  }
}

double jp(double w, PExponent p) {
  const double pv = p.value();
  if (pv == 2.0) return w;
  return std::pow(std::fabs(w), pv - 2.0) * w;
}

namespace {

// Node value on the closed rectangle; out-of-range, boundary, and masked-out
// nodes read as zero. I, J are 1-based interior coordinates.
inline double closed_value(const Grid& g, std::span<const double> v, long I, long J) {
  if (I < 1 || I > g.nx() || J < 1 || J > g.ny()) return 0.0;
  const long idx = (J - 1) * g.nx() + (I - 1);
  return v[static_cast<std::size_t>(idx)];
}

inline double closed_value_1d(const Grid& g, std::span<const double> v, long I) {
  if (I < 1 || I > g.nx()) return 0.0;
  return v[static_cast<std::size_t>(I - 1)];
}

}  // namespace

CellGradientField gradient(const GridFunction& u) {
  if (!u.valid()) throw std::invalid_argument("invalid grid function");
  const Grid& g = u.grid();
  CellGradientField f;
  f.grid = u.grid_ptr();
  auto v = u.values();
  if (g.dim() == 1) {
    const double h = g.hx();
    f.gx.resize(static_cast<std::size_t>(g.nx() + 1));
    for (long a = 0; a <= g.nx(); ++a) {
      f.gx[static_cast<std::size_t>(a)] =
          (closed_value_1d(g, v, a + 1) - closed_value_1d(g, v, a)) / h;
    }
  } else {
    const double hx = g.hx(), hy = g.hy();
    const long cx = g.nx() + 1, cy = g.ny() + 1;
    f.gx.resize(static_cast<std::size_t>(cx * cy));
    f.gy.resize(static_cast<std::size_t>(cx * cy));
    for (long b = 0; b < cy; ++b) {
      for (long a = 0; a < cx; ++a) {
        const double base = closed_value(g, v, a, b);
        const std::size_t c = static_cast<std::size_t>(b * cx + a);
        f.gx[c] = (closed_value(g, v, a + 1, b) - base) / hx;
        f.gy[c] = (closed_value(g, v, a, b + 1) - base) / hy;
      }
    }
  }
  return f;
}

double dirichlet_energy(const GridFunction& u, PExponent p) {
  if (!u.valid()) throw std::invalid_argument("invalid grid function");
  return detail::dirichlet_energy_raw(u.grid(), u.values(), p.value());
}

GridFunction energy_gradient(const GridFunction& u, PExponent p) {
  if (!u.valid()) throw std::invalid_argument("invalid grid function");
  std::vector<double> out(static_cast<std::size_t>(u.size()), 0.0);
  detail::energy_gradient_raw(u.grid(), u.values(), p.value(), out, nullptr);
  return GridFunction(u.grid_ptr(), std::move(out));
}

double rayleigh(const GridFunction& u, PExponent p) {
  const double mass = lp_mass(u, p.value());
  if (mass <= 0.0) {
    throw std::domain_error("rayleigh quotient of the zero function");
  }
  return p.value() * dirichlet_energy(u, p) / mass;
}

namespace detail {

double dirichlet_energy_raw(const Grid& g, std::span<const double> v, double p) {
  double acc = 0.0;
  if (g.dim() == 1) {
    const double h = g.hx();
    for (long a = 0; a <= g.nx(); ++a) {
      const double d = (closed_value_1d(g, v, a + 1) - closed_value_1d(g, v, a)) / h;
      acc += (p == 2.0) ? d * d : std::pow(std::fabs(d), p);
    }
  } else {
    const double hx = g.hx(), hy = g.hy();
    for (long b = 0; b <= g.ny(); ++b) {
      for (long a = 0; a <= g.nx(); ++a) {
        const double base = closed_value(g, v, a, b);
        const double dx = (closed_value(g, v, a + 1, b) - base) / hx;
        const double dy = (closed_value(g, v, a, b + 1) - base) / hy;
        const double s = dx * dx + dy * dy;
        acc += (p == 2.0) ? s : std::pow(s, 0.5 * p);
      }
    }
  }
  return g.cell_volume() * acc / p;
}

double pow_half_diff(double s, double ds, double ph) {
  const double s_new = s + ds;
  if (!(s > 0.0) || !(s_new > 0.0)) {
    return std::pow(std::max(s_new, 0.0), ph) - std::pow(std::max(s, 0.0), ph);
  }
  const double r = ds / s;
  if (!(std::fabs(r) < 0.5)) {
    return std::pow(s_new, ph) - std::pow(s, ph);
  }
  return std::pow(s, ph) * std::expm1(ph * std::log1p(r));
}

double dirichlet_energy_delta(const Grid& g, std::span<const double> w,
                              std::span<const double> delta, double p) {
  const double ph = 0.5 * p;
  double acc = 0.0;
  if (g.dim() == 1) {
    const double h = g.hx();
    for (long a = 0; a <= g.nx(); ++a) {
      const double d = (closed_value_1d(g, w, a + 1) - closed_value_1d(g, w, a)) / h;
      const double dd = (closed_value_1d(g, delta, a + 1) - closed_value_1d(g, delta, a)) / h;
      acc += pow_half_diff(d * d, dd * (2.0 * d + dd), ph);
    }
  } else {
    const double hx = g.hx(), hy = g.hy();
    for (long b = 0; b <= g.ny(); ++b) {
      for (long a = 0; a <= g.nx(); ++a) {
        const double base = closed_value(g, w, a, b);
        const double dx = (closed_value(g, w, a + 1, b) - base) / hx;
        const double dy = (closed_value(g, w, a, b + 1) - base) / hy;
        const double dbase = closed_value(g, delta, a, b);
        const double ddx = (closed_value(g, delta, a + 1, b) - dbase) / hx;
        const double ddy = (closed_value(g, delta, a, b + 1) - dbase) / hy;
        const double s = dx * dx + dy * dy;
        const double ds = ddx * (2.0 * dx + ddx) + ddy * (2.0 * dy + ddy);
        acc += pow_half_diff(s, ds, ph);
      }
    }
  }
  return g.cell_volume() * acc / p;
}

double lp_mass_delta(const Grid& g, std::span<const double> u, std::span<const double> delta,
                     double p) {
  const double ph = 0.5 * p;
  double acc = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    acc += pow_half_diff(u[i] * u[i], delta[i] * (2.0 * u[i] + delta[i]), ph);
  }
  return g.cell_volume() * acc;
}

void energy_gradient_raw(const Grid& g, std::span<const double> v, double p,
                         std::span<double> out, double* sup_out, double* flux_sup_out) {
  std::fill(out.begin(), out.end(), 0.0);
  const double vol = g.cell_volume();
  double flux_sup = 0.0;
  if (g.dim() == 1) {
    const double h = g.hx();
    // out_i = J_p(D_{i-1}) - J_p(D_i): the flux difference of the edge slopes.
    double flux_left = 0.0;
    for (long a = 0; a <= g.nx(); ++a) {
      const double d = (closed_value_1d(g, v, a + 1) - closed_value_1d(g, v, a)) / h;
      const double flux = (p == 2.0) ? d : std::pow(std::fabs(d), p - 2.0) * d;
      flux_sup = std::max(flux_sup, std::fabs(flux));
      if (a >= 1) out[static_cast<std::size_t>(a - 1)] = flux_left - flux;
      flux_left = flux;
    }
  } else {
    const double hx = g.hx(), hy = g.hy();
    const long nx = g.nx(), ny = g.ny();
    for (long b = 0; b <= ny; ++b) {
      for (long a = 0; a <= nx; ++a) {
        const double base = closed_value(g, v, a, b);
        const double dx = (closed_value(g, v, a + 1, b) - base) / hx;
        const double dy = (closed_value(g, v, a, b + 1) - base) / hy;
        double w;
        if (p == 2.0) {
          w = 1.0;
        } else {
          const double s = dx * dx + dy * dy;
          w = (s == 0.0) ? 0.0 : std::pow(s, 0.5 * p - 1.0);
        }
        const double fx = vol * w * dx / hx;
        const double fy = vol * w * dy / hy;
        flux_sup = std::max({flux_sup, std::fabs(fx), std::fabs(fy)});
        if (a >= 1 && a <= nx && b >= 1 && b <= ny) {
          out[static_cast<std::size_t>((b - 1) * nx + (a - 1))] -= fx + fy;
        }
        if (a + 1 <= nx && b >= 1 && b <= ny) {
          out[static_cast<std::size_t>((b - 1) * nx + a)] += fx;
        }
        if (a >= 1 && a <= nx && b + 1 <= ny) {
          out[static_cast<std::size_t>(b * nx + (a - 1))] += fy;
        }
      }
    }
  }
  // Masked-out nodes are not degrees of freedom.
  double sup = 0.0;
  for (long i = 0; i < g.num_nodes(); ++i) {
    auto idx = static_cast<std::size_t>(i);
    if (!g.active(i)) {
      out[idx] = 0.0;
    } else {
      sup = std::max(sup, std::fabs(out[idx]));
    }
  }
  if (sup_out) *sup_out = sup;
  if (flux_sup_out) *flux_sup_out = flux_sup;
}

}  // namespace detail

}  // namespace pflow
