#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pflow/oracle.hpp"
#include "pflow/pcalc.hpp"

using namespace pflow;

namespace {

GridFunction random_u(const std::shared_ptr<const Grid>& g, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-1.0, 1.0);
  std::vector<double> v(static_cast<std::size_t>(g->num_nodes()));
  for (auto& x : v) x = dist(rng);
  return GridFunction(g, std::move(v));
}

// test-side oracle: dense apply of the assembled 3-point / 5-point negative
// Dirichlet Laplacian, independent of the energy-gradient code path
std::vector<double> apply_stencil(const Grid& g, const GridFunction& u) {
  std::vector<double> out(static_cast<std::size_t>(g.num_nodes()), 0.0);
  if (g.dim() == 1) {
    const double h2 = g.hx() * g.hx();
    for (long i = 0; i < g.nx(); ++i) {
      const double left = (i > 0) ? u[i - 1] : 0.0;
      const double right = (i < g.nx() - 1) ? u[i + 1] : 0.0;
      out[static_cast<std::size_t>(i)] = (2.0 * u[i] - left - right) / h2;
    }
  } else {
    const double hx2 = g.hx() * g.hx(), hy2 = g.hy() * g.hy();
    for (long j = 0; j < g.ny(); ++j) {
      for (long i = 0; i < g.nx(); ++i) {
        auto val = [&](long a, long b) -> double {
          if (a < 0 || a >= g.nx() || b < 0 || b >= g.ny()) return 0.0;
          return u[g.index(a, b)];
        };
        out[static_cast<std::size_t>(g.index(i, j))] =
            (2.0 * val(i, j) - val(i - 1, j) - val(i + 1, j)) / hx2 +
            (2.0 * val(i, j) - val(i, j - 1) - val(i, j + 1)) / hy2;
      }
    }
  }
  return out;
}

}  // namespace

TEST_CASE("jp examples and oddness") {
  CHECK(jp(2.0, PExponent(2.0)) == 2.0);
  CHECK(jp(-2.0, PExponent(3.0)) == -4.0);
  CHECK(jp(0.0, PExponent(7.0)) == 0.0);
  CHECK(jp(-3.0, PExponent(4.0)) == -jp(3.0, PExponent(4.0)));
}

TEST_CASE("jp strictly monotone") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> dist(-4.0, 4.0);
  for (double p : {2.0, 3.0, 4.5, 11.0}) {
    PExponent pe(p);
    for (int trial = 0; trial < 100; ++trial) {
      double a = dist(rng), b = dist(rng);
      if (a == b) continue;
      if (a > b) std::swap(a, b);
      CHECK(jp(a, pe) < jp(b, pe));
    }
  }
}

TEST_CASE("p exponent range") {
  CHECK_THROWS_AS(PExponent(1.5), std::invalid_argument);
  CHECK_THROWS_AS(PExponent(201.0), std::invalid_argument);
  CHECK(PExponent(2.0).conjugate() == 2.0);
  CHECK(PExponent(3.0).conjugate() == doctest::Approx(1.5));
}

TEST_CASE("gradient examples") {
  auto g1 = Grid::interval(1.0, 1);
  auto f = gradient(GridFunction(g1, {1.0}));
  REQUIRE(f.num_cells() == 2);
  CHECK(f.gx[0] == doctest::Approx(2.0));
  CHECK(f.gx[1] == doctest::Approx(-2.0));

  auto fz = gradient(GridFunction::zeros(g1));
  CHECK(fz.gx[0] == 0.0);
  CHECK(fz.gx[1] == 0.0);

  auto g2 = Grid::interval(1.0, 2);
  auto f2 = gradient(GridFunction(g2, {1.0, 1.0}));
  REQUIRE(f2.num_cells() == 3);
  CHECK(f2.gx[0] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(f2.gx[1] == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(f2.gx[2] == doctest::Approx(-3.0).epsilon(1e-14));
}

TEST_CASE("dirichlet energy examples") {
  auto g = Grid::interval(1.0, 1);
  CHECK(dirichlet_energy(GridFunction::zeros(g), PExponent(3.0)) == 0.0);
  CHECK(dirichlet_energy(GridFunction(g, {1.0}), PExponent(2.0)) ==
        doctest::Approx(2.0).epsilon(1e-15));
  CHECK(dirichlet_energy(GridFunction(g, {1.0}), PExponent(3.0)) ==
        doctest::Approx(8.0 / 3.0).epsilon(1e-15));
}

TEST_CASE("energy gradient scalar example") {
  auto g = Grid::interval(1.0, 1);
  GridFunction eg = energy_gradient(GridFunction(g, {1.0}), PExponent(2.0));
  CHECK(eg[0] == doctest::Approx(4.0).epsilon(1e-15));
  GridFunction ez = energy_gradient(GridFunction::zeros(g), PExponent(4.0));
  CHECK(ez[0] == 0.0);
}

TEST_CASE("energy gradient matches the assembled stencil at p=2") {
  std::mt19937_64 rng(17);
  for (auto grid : {Grid::interval(1.0, 9), Grid::rectangle(1.0, 1.5, 5, 4)}) {
    GridFunction u = random_u(grid, rng);
    GridFunction eg = energy_gradient(u, PExponent(2.0));
    auto au = apply_stencil(*grid, u);
    for (long i = 0; i < u.size(); ++i) {
      CHECK(eg[i] == doctest::Approx(grid->cell_volume() * au[i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("energy gradient matches central differences") {
  std::mt19937_64 rng(23);
  for (auto grid : {Grid::interval(1.0, 7),
                    Grid::rectangle(1.0, 1.0, 4, 4),
                    Grid::masked_rectangle(1.0, 1.0, 3, 3,
                                           {1, 1, 0, 1, 1, 1, 0, 1, 1})}) {
    for (double p : {2.0, 3.0, 4.5}) {
      PExponent pe(p);
      for (int trial = 0; trial < 3; ++trial) {
        GridFunction u = random_u(grid, rng);
        GridFunction phi = random_u(grid, rng);
        const double eps = 1e-5 * std::max(1.0, sup_norm(u)) / std::max(1.0, sup_norm(phi));
        const double fd = (dirichlet_energy(add_scaled(u, phi, eps), pe) -
                           dirichlet_energy(add_scaled(u, phi, -eps), pe)) /
                          (2.0 * eps);
        GridFunction eg = energy_gradient(u, pe);
        double inner = 0.0;
        for (long i = 0; i < u.size(); ++i) inner += eg[i] * phi[i];
        CHECK(fd == doctest::Approx(inner).epsilon(1e-6));
      }
    }
  }
}

TEST_CASE("energy convexity along segments") {
  std::mt19937_64 rng(31);
  auto grid = Grid::interval(1.0, 15);
  std::uniform_real_distribution<double> tdist(0.0, 1.0);
  for (double p : {2.0, 3.0, 4.5}) {
    PExponent pe(p);
    for (int trial = 0; trial < 20; ++trial) {
      GridFunction u = random_u(grid, rng);
      GridFunction w = random_u(grid, rng);
      const double th = tdist(rng);
      GridFunction mid = add_scaled(scale(u, th), w, 1.0 - th);
      CHECK(dirichlet_energy(mid, pe) <=
            th * dirichlet_energy(u, pe) + (1.0 - th) * dirichlet_energy(w, pe) + 1e-12);
    }
  }
}

TEST_CASE("rayleigh examples") {
  auto g = Grid::interval(1.0, 1);
  PExponent p2(2.0);
  GridFunction u(g, {1.0});
  CHECK(rayleigh(u, p2) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK(rayleigh(scale(u, -3.0), p2) == doctest::Approx(8.0).epsilon(1e-14));
  CHECK_THROWS_AS(rayleigh(GridFunction::zeros(g), p2), std::domain_error);
}

TEST_CASE("rayleigh of the sampled sine hits the closed-form eigenvalue") {
  const long n = 127;
  auto g = Grid::interval(1.0, n);
  std::vector<double> v(n);
  for (long i = 0; i < n; ++i) {
    v[static_cast<std::size_t>(i)] = std::sin(std::numbers::pi * g->node_x(i));
  }
  GridFunction u(g, v);
  const double h = g->hx();
  const double lam = 2.0 / (h * h) * (1.0 - std::cos(std::numbers::pi * h));
  CHECK(lam == doctest::Approx(9.8692).epsilon(1e-4));
  CHECK(rayleigh(u, PExponent(2.0)) == doctest::Approx(lam).epsilon(1e-13));
}

TEST_CASE("discrete Poincare lower bound for random functions") {
  std::mt19937_64 rng(41);
  auto grid = Grid::interval(1.0, 31);
  SUBCASE("p = 2 closed form") {
    const double lam = smallest_eigenvalue_closed_form(*grid);
    for (int trial = 0; trial < 30; ++trial) {
      GridFunction u = random_u(grid, rng);
      CHECK(rayleigh(u, PExponent(2.0)) >= lam - 1e-9);
    }
  }
  SUBCASE("p = 3 oracle minimum") {
    const double lam = rayleigh_minimize(grid, PExponent(3.0), 1, 1e-9).lambda_p;
    for (int trial = 0; trial < 10; ++trial) {
      GridFunction u = random_u(grid, rng);
      CHECK(rayleigh(u, PExponent(3.0)) >= lam - 1e-9);
    }
  }
}
