#include <doctest.h>

#include <cmath>
#include <random>

#include "pflow/step.hpp"

using namespace pflow;

namespace {

GridFunction random_u(const std::shared_ptr<const Grid>& g, std::mt19937_64& rng, double lo = -1.0,
                      double hi = 1.0) {
  std::uniform_real_distribution<double> dist(lo, hi);
  std::vector<double> v(static_cast<std::size_t>(g->num_nodes()));
  for (auto& x : v) x = dist(rng);
  return GridFunction(g, std::move(v));
}

double rel_sup_distance(const GridFunction& a, const GridFunction& b) {
  double d = 0.0, s = 0.0;
  for (long i = 0; i < a.size(); ++i) {
    d = std::max(d, std::fabs(a[i] - b[i]));
    s = std::max(s, std::fabs(a[i]));
  }
  return d / std::max(s, 1e-300);
}

}  // namespace

TEST_CASE("step functional values") {
  auto g = Grid::interval(1.0, 1);
  PExponent p2(2.0);
  GridFunction vp(g, {1.0});

  // zero velocity leaves only the energy
  CHECK(step_functional(vp, vp, 0.1, p2) ==
        doctest::Approx(dirichlet_energy(vp, p2)).epsilon(1e-15));
  CHECK(step_functional(GridFunction::zeros(g), GridFunction::zeros(g), 0.1, p2) == 0.0);
  // hand-evaluated: 0.1*0.5*(1/2)*25 + Phi((0.5)) = 0.625 + 0.5
  CHECK(step_functional(GridFunction(g, {0.5}), vp, 0.1, p2) ==
        doctest::Approx(1.125).epsilon(1e-15));
}

TEST_CASE("implicit step on the scalar problem solves the resolvent") {
  auto g = Grid::interval(1.0, 1);
  PExponent p2(2.0);
  StepConfig cfg{0.1, 1e-13, 50000};

  // (w - 1)/tau = -8w  =>  w = 1/1.8
  StepResult r = implicit_step(GridFunction(g, {1.0}), cfg, p2);
  CHECK(r.v_new[0] == doctest::Approx(1.0 / 1.8).epsilon(1e-12));
  CHECK(r.residual <= cfg.tol_inner);
  CHECK(r.dissipation >= 0.0);

  // iterated: v^k = 1.8^{-k}
  GridFunction v(g, {1.0});
  for (int k = 1; k <= 20; ++k) {
    v = implicit_step(v, cfg, p2).v_new;
    CHECK(v[0] == doctest::Approx(std::pow(1.8, -k)).epsilon(1e-11));
  }
}

TEST_CASE("implicit step maps zero to zero") {
  auto g = Grid::interval(1.0, 5);
  StepResult r = implicit_step(GridFunction::zeros(g), StepConfig{0.1, 1e-10, 1000}, PExponent(3.0));
  for (long i = 0; i < r.v_new.size(); ++i) CHECK(r.v_new[i] == 0.0);
  CHECK(r.dissipation == 0.0);
  CHECK(r.inner_iters == 0);
}

TEST_CASE("el_residual examples") {
  auto g = Grid::interval(1.0, 1);
  PExponent p2(2.0);
  GridFunction vp(g, {1.0});
  CHECK(el_residual(GridFunction::zeros(g), GridFunction::zeros(g), 0.1, p2) == 0.0);
  CHECK(el_residual(GridFunction(g, {1.0 / 1.8}), vp, 0.1, p2) <= 1e-12);
  CHECK(el_residual(vp, vp, 0.1, p2) > 0.1);
}

TEST_CASE("uniqueness surrogate: inner starting point does not matter") {
  std::mt19937_64 rng(3);
  auto g = Grid::interval(1.0, 33);
  PExponent p(3.0);
  StepConfig cfg{1e-3, 1e-10, 200000};
  GridFunction v = random_u(g, rng);
  StepResult a = implicit_step(v, cfg, p);
  StepResult b = implicit_step(v, cfg, p, scale(v, 0.5));
  CHECK(rel_sup_distance(a.v_new, b.v_new) <= 10.0 * cfg.tol_inner);
}

TEST_CASE("p=2 comparison: nonnegative data stays nonnegative") {
  std::mt19937_64 rng(7);
  auto g = Grid::interval(1.0, 21);
  StepConfig cfg{1e-2, 1e-12, 200000};
  for (int trial = 0; trial < 5; ++trial) {
    GridFunction v = random_u(g, rng, 0.0, 1.0);
    StepResult r = implicit_step(v, cfg, PExponent(2.0));
    for (long i = 0; i < r.v_new.size(); ++i) CHECK(r.v_new[i] >= -1e-12);
  }
}

TEST_CASE("step homogeneity under positive scaling") {
  std::mt19937_64 rng(13);
  auto g = Grid::interval(1.0, 17);
  for (double p : {2.0, 3.0, 4.0}) {
    StepConfig cfg{1e-2, 1e-12, 200000};
    GridFunction v = random_u(g, rng);
    const double c = 3.5;
    StepResult a = implicit_step(v, cfg, PExponent(p));
    StepResult b = implicit_step(scale(v, c), cfg, PExponent(p));
    CHECK(rel_sup_distance(scale(a.v_new, c), b.v_new) <= 1e-8);
  }
}

TEST_CASE("per-step energy inequality on randomized instances") {
  std::mt19937_64 rng(19);
  auto g = Grid::interval(1.0, 25);
  for (double p : {2.0, 3.0, 4.0}) {
    PExponent pe(p);
    for (double tau : {1e-3, 1e-2, 1e-1}) {
      StepConfig cfg{tau, 1e-10, 200000};
      GridFunction v = random_u(g, rng);
      const double phi_prev = dirichlet_energy(v, pe);
      StepResult r = implicit_step(v, cfg, pe);
      CHECK(r.dissipation + dirichlet_energy(r.v_new, pe) <=
            phi_prev + 1e-9 * std::max(1.0, phi_prev));
    }
  }
}

TEST_CASE("step input validation") {
  auto g = Grid::interval(1.0, 3);
  GridFunction v(g, {1.0, 2.0, 3.0});
  CHECK_THROWS_AS(implicit_step(v, StepConfig{0.0, 1e-10, 100}, PExponent(2.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(implicit_step(v, StepConfig{0.1, 2.0, 100}, PExponent(2.0)),
                  std::invalid_argument);
  // non-convergence carries the residual
  try {
    implicit_step(v, StepConfig{0.1, 1e-10, 1}, PExponent(4.0));
    CHECK(false);
  } catch (const SolverError& e) {
    CHECK(e.residual() > 0.0);
  }
}
