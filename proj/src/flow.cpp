#include "pflow/flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <deque>
#include <fstream>
#include <limits>
#include <stdexcept>

namespace pflow {

namespace {

// exp(arg) with the argument clamped so the record stays finite even when a
// biased rate estimate is extrapolated far past convergence.
double safe_exp(double arg) { return std::exp(std::min(arg, 700.0)); }

double pow_ratio(double base, double inv_exponent) {
  // base^(1/inv_exponent) for positive base
  return std::pow(base, 1.0 / inv_exponent);
}

struct ShapeBuffer {
  std::vector<double> cur, prev;
};

// lp distance of unit-mass normalized iterates, ||v/|v| - w/|w|||_p.
double normalized_shape_distance(const Grid& g, std::span<const double> v, double mass_v,
                                 std::span<const double> w, double mass_w, double p,
                                 ShapeBuffer& buf) {
  const double cv = std::pow(mass_v, 1.0 / p);
  const double cw = std::pow(mass_w, 1.0 / p);
  buf.cur.resize(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) buf.cur[i] = v[i] / cv - w[i] / cw;
  return std::pow(detail::lp_mass_raw(g, buf.cur, p), 1.0 / p);
}

}  // namespace

const char* to_string(FlowStatus s) {
  switch (s) {
    case FlowStatus::Converged: return "converged";
    case FlowStatus::DegenerateZero: return "degenerate_zero";
    case FlowStatus::HorizonReached: return "horizon_reached";
    case FlowStatus::MaxStepsReached: return "max_steps_reached";
  }
  return "unknown";
}

FlowTrajectory run_flow(const GridFunction& g, PExponent p, const FlowConfig& cfg,
                        const StepConfig& step_cfg) {
  if (!g.valid()) throw std::invalid_argument("invalid initial condition");
  if (cfg.stop_window < 1) throw std::invalid_argument("stop_window must be >= 1");
  if (cfg.record_every < 1) throw std::invalid_argument("record_every must be >= 1");
  if (!(cfg.stop_tol > 0.0) || !(cfg.zero_threshold > 0.0)) {
    throw std::invalid_argument("tolerances must be positive");
  }
  if (cfg.max_steps < 1) throw std::invalid_argument("max_steps must be >= 1");

  const double pv = p.value();
  const double tau = step_cfg.tau;

  FlowTrajectory traj;
  traj.grid = g.grid_ptr();
  traj.p = pv;
  traj.cfg = cfg;
  traj.step_cfg = step_cfg;

  const double mass0 = lp_mass(g, pv);
  const double phi0 = dirichlet_energy(g, p);
  traj.phi_g = phi0;

  DiagnosticsRecord rec0;
  rec0.k = 0;
  rec0.t = 0.0;
  rec0.mass = mass0;
  rec0.energy = phi0;
  rec0.rayleigh = (mass0 > 0.0) ? pv * phi0 / mass0 : 0.0;
  rec0.lambda_hat = rec0.rayleigh;
  rec0.mu_hat = (mass0 > 0.0) ? pow_ratio(rec0.rayleigh, pv - 1.0) : 0.0;
  rec0.rescaled_energy = pv * phi0;
  traj.records.push_back(rec0);
  if (cfg.keep_iterates) traj.iterates.push_back(g);

  if (mass0 <= 0.0) {
    traj.final_v = g;
    traj.status = FlowStatus::DegenerateZero;
    traj.steps_used = 0;
    return traj;
  }

  long horizon = cfg.max_steps;
  bool has_fixed_horizon = false;
  if (cfg.steps > 0) {
    horizon = std::min(cfg.steps, cfg.max_steps);
    has_fixed_horizon = true;
  }

  GridFunction v_prev = g;
  double mass_prev = mass0;
  double rayleigh_prev = rec0.rayleigh;
  double diss_cum = 0.0;
  int consecutive_flat = 0;
  int zero_count = 0;
  std::deque<double> rate_window;
  ShapeBuffer shape_buf;
  FlowStatus status = has_fixed_horizon ? FlowStatus::HorizonReached : FlowStatus::MaxStepsReached;
  long k = 0;
  DiagnosticsRecord last_rec = rec0;
  bool last_rec_stored = true;

  while (k < horizon) {
    ++k;
    StepResult sr = implicit_step(v_prev, step_cfg, p);
    const GridFunction& v = sr.v_new;
    const double mass = lp_mass(v, pv);
    const double phi = dirichlet_energy(v, p);
    diss_cum += sr.dissipation;
    traj.max_step_gap =
        std::max(traj.max_step_gap, sr.dissipation * std::pow(tau, pv - 1.0));

    DiagnosticsRecord rec;
    rec.k = k;
    rec.t = static_cast<double>(k) * tau;
    rec.mass = mass;
    rec.energy = phi;
    rec.rayleigh = (mass > 0.0) ? pv * phi / mass : 0.0;
    rec.lambda_hat = rec.rayleigh;
    rec.dissipation_cum = diss_cum;
    {
      double vt = 0.0;
      for (long i = 0; i < v.size(); ++i) {
        vt = std::max(vt, std::fabs(v[i] - v_prev[i]));
      }
      rec.vt_sup = vt / tau;
    }

    if (mass > 0.0 && mass_prev > 0.0) {
      const double inst = -std::log(mass / mass_prev) / (pv * tau);
      rate_window.push_back(inst);
      while (static_cast<int>(rate_window.size()) > cfg.stop_window) rate_window.pop_front();
      double avg = 0.0;
      for (double r : rate_window) avg += r;
      rec.mu_hat = avg / static_cast<double>(rate_window.size());
    } else {
      rec.mu_hat = last_rec.mu_hat;
    }
    rec.rescaled_energy =
        (phi > 0.0) ? safe_exp(pv * rec.mu_hat * rec.t + std::log(pv * phi)) : 0.0;

    if (cfg.keep_iterates) traj.iterates.push_back(v);
    last_rec = rec;
    last_rec_stored = (k % cfg.record_every == 0);
    if (last_rec_stored) traj.records.push_back(rec);

    if (mass <= 0.0) {
      // underflowed to the zero function; nothing further can be computed
      status = FlowStatus::DegenerateZero;
      v_prev = v;
      break;
    }

    // degenerate branch first: the rescaled mass stays below the zero
    // threshold (takes precedence over the convergence stop, since tiny
    // eigenvector-shaped data would otherwise satisfy it)
    const double rescaled_mass = safe_exp(pv * rec.mu_hat * rec.t + std::log(mass));
    zero_count = (rescaled_mass < cfg.zero_threshold) ? zero_count + 1 : 0;
    if (zero_count >= cfg.stop_window) {
      status = FlowStatus::DegenerateZero;
      v_prev = v;
      break;
    }

    // convergence: Rayleigh flat per unit time over the window AND the
    // normalized iterate is Cauchy at the stop tolerance
    const double rel_change =
        std::fabs(rec.rayleigh - rayleigh_prev) / (std::max(rec.rayleigh, 1e-300) * tau);
    consecutive_flat = (rel_change < cfg.stop_tol) ? consecutive_flat + 1 : 0;
    if (!cfg.run_to_horizon && consecutive_flat >= cfg.stop_window) {
      const double shape_move = normalized_shape_distance(
          v.grid(), v.values(), mass, v_prev.values(), mass_prev, pv, shape_buf);
      if (shape_move <= cfg.stop_tol * tau) {
        status = FlowStatus::Converged;
        v_prev = v;
        break;
      }
    }

    v_prev = v;
    mass_prev = mass;
    rayleigh_prev = rec.rayleigh;
  }

  if (!last_rec_stored) traj.records.push_back(last_rec);
  traj.final_v = v_prev;
  traj.status = status;
  traj.steps_used = k;
  return traj;
}

RateEstimate estimate_rates(const FlowTrajectory& traj, PExponent p) {
  if (traj.status == FlowStatus::DegenerateZero) {
    throw std::domain_error("rate estimate on a degenerate (zero-limit) trajectory");
  }
  if (traj.records.size() < 2) {
    throw std::domain_error("rate estimate needs at least two records");
  }
  const double pv = p.value();
  const auto& recs = traj.records;
  const std::size_t pairs = recs.size() - 1;
  const std::size_t window = std::min<std::size_t>(pairs, static_cast<std::size_t>(traj.cfg.stop_window));

  double avg = 0.0;
  for (std::size_t j = recs.size() - window; j < recs.size(); ++j) {
    const auto& a = recs[j - 1];
    const auto& b = recs[j];
    if (!(a.mass > 0.0) || !(b.mass > 0.0)) {
      throw std::domain_error("rate estimate: mass below zero threshold");
    }
    const double dt = b.t - a.t;
    avg += -std::log(b.mass / a.mass) / (pv * dt);
  }
  RateEstimate r;
  r.mu_hat = avg / static_cast<double>(window);
  r.lambda_hat = recs.back().rayleigh;
  const double mu_from_lambda = pow_ratio(r.lambda_hat, pv - 1.0);
  r.consistency = std::fabs(r.mu_hat - mu_from_lambda) / std::fabs(r.mu_hat);
  return r;
}

GroundStateResult extract_ground_state(const FlowTrajectory& traj, PExponent p,
                                       const FlowConfig& cfg) {
  GroundStateResult res;
  res.steps_used = traj.steps_used;

  if (traj.status == FlowStatus::DegenerateZero) {
    res.psi = GridFunction::zeros(traj.grid);
    res.converged = true;
    res.degenerate_zero = true;
    return res;
  }
  if (traj.status != FlowStatus::Converged) {
    throw std::logic_error("extract_ground_state: trajectory did not converge");
  }

  const double pv = p.value();
  const auto& last = traj.records.back();
  const double rescaled_mass =
      (last.mass > 0.0) ? safe_exp(pv * last.mu_hat * last.t + std::log(last.mass)) : 0.0;
  if (rescaled_mass < cfg.zero_threshold) {
    res.psi = GridFunction::zeros(traj.grid);
    res.converged = true;
    res.degenerate_zero = true;
    return res;
  }

  const GridFunction& v = traj.final_v;
  const double mass = lp_mass(v, pv);
  const double c = std::pow(mass, 1.0 / pv);
  std::vector<double> vals(v.values().begin(), v.values().end());
  for (auto& x : vals) x /= c;

  // Sign convention: the first node of maximal magnitude is positive.
  std::size_t arg = 0;
  double best = -1.0;
  for (std::size_t i = 0; i < vals.size(); ++i) {
    if (std::fabs(vals[i]) > best) {
      best = std::fabs(vals[i]);
      arg = i;
    }
  }
  if (vals[arg] < 0.0) {
    for (auto& x : vals) x = -x;
  }

  res.psi = GridFunction(traj.grid, std::move(vals));
  res.lambda_p = rayleigh(res.psi, p);
  res.mu_p = pow_ratio(res.lambda_p, pv - 1.0);
  res.converged = true;
  res.degenerate_zero = false;
  return res;
}

double check_separation_of_variables(const GroundStateResult& gs, PExponent p, double tau,
                                     long k_steps) {
  if (!gs.converged || gs.degenerate_zero) {
    throw std::invalid_argument("separation check needs a non-degenerate ground state");
  }
  const double pv = p.value();
  FlowConfig fcfg;
  fcfg.steps = k_steps;
  fcfg.max_steps = k_steps;
  fcfg.run_to_horizon = true;
  fcfg.keep_iterates = true;
  StepConfig scfg;
  scfg.tau = tau;
  scfg.tol_inner = 1e-12;
  scfg.max_inner_iters = 200000;

  FlowTrajectory traj = run_flow(gs.psi, p, fcfg, scfg);
  const double sup_psi = sup_norm(gs.psi);
  double worst = 0.0;
  for (std::size_t k = 1; k < traj.iterates.size(); ++k) {
    const GridFunction& v = traj.iterates[k];
    const double ck = std::pow(lp_mass(v, pv), 1.0 / pv);
    double dist = 0.0;
    for (long i = 0; i < v.size(); ++i) {
      dist = std::max(dist, std::fabs(v[i] - ck * gs.psi[i]));
    }
    const double denom = std::max(ck * sup_psi, std::numeric_limits<double>::min());
    worst = std::max(worst, dist / denom);
  }
  return worst;
}

bool check_vt_bound(const FlowTrajectory& traj, const GridFunction& g, PExponent p) {
  const double pv = p.value();
  const double sup_force = sup_norm(energy_gradient(g, p)) / g.grid().cell_volume();
  const double c_bound = std::pow(sup_force, 1.0 / (pv - 1.0));
  for (const auto& rec : traj.records) {
    if (rec.vt_sup > c_bound * (1.0 + 1e-6)) return false;
  }
  return true;
}

double interpolant_gap(const FlowTrajectory& traj, PExponent p, double tau) {
  (void)tau;  // the gap is independent of the step size; kept for call-site symmetry
  if (traj.steps_used < 1) return 0.0;
  if (!traj.iterates.empty()) {
    // recompute honestly when the iterates are available
    const double pv = p.value();
    double worst = 0.0;
    std::vector<double> diff;
    for (std::size_t k = 1; k < traj.iterates.size(); ++k) {
      const auto& a = traj.iterates[k - 1];
      const auto& b = traj.iterates[k];
      diff.assign(a.values().begin(), a.values().end());
      for (long i = 0; i < b.size(); ++i) diff[static_cast<std::size_t>(i)] -= b[i];
      worst = std::max(worst, detail::lp_mass_raw(a.grid(), diff, pv));
    }
    return worst;
  }
  return traj.max_step_gap;
}

void write_timeseries_csv(const std::string& path, const FlowTrajectory& traj) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out << "k,t,mass,energy,rayleigh,lambda_hat,mu_hat,rescaled_energy,dissipation_cum,vt_sup\n";
  char buf[64];
  auto put = [&](double x, bool last) {
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    out << buf << (last ? '\n' : ',');
  };
  for (const auto& r : traj.records) {
    out << r.k << ',';
    put(r.t, false);
    put(r.mass, false);
    put(r.energy, false);
    put(r.rayleigh, false);
    put(r.lambda_hat, false);
    put(r.mu_hat, false);
    put(r.rescaled_energy, false);
    put(r.dissipation_cum, false);
    put(r.vt_sup, true);
  }
  if (!out) throw std::runtime_error("write failed for '" + path + "'");
}

}  // namespace pflow
