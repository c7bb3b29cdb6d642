#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <random>

#include "pflow/grid.hpp"

using namespace pflow;

TEST_CASE("interval grid spacing") {
  auto g = Grid::interval(1.0, 1);
  CHECK(g->dim() == 1);
  CHECK(g->hx() == 0.5);
  CHECK(g->num_nodes() == 1);
  CHECK(g->cell_volume() == 0.5);
}

TEST_CASE("rectangle grid spacing") {
  auto g = Grid::rectangle(1.0, 1.0, 3, 3);
  CHECK(g->hx() == 0.25);
  CHECK(g->hy() == 0.25);
  CHECK(g->num_nodes() == 9);
}

TEST_CASE("grid construction errors") {
  CHECK_THROWS_AS(Grid::interval(0.0, 4), std::invalid_argument);
  CHECK_THROWS_AS(Grid::interval(1.0, 0), std::invalid_argument);
  CHECK_THROWS_AS(Grid::rectangle(1.0, -1.0, 3, 3), std::invalid_argument);
  // all-false mask = empty domain
  CHECK_THROWS_WITH_AS(
      Grid::masked_rectangle(1.0, 1.0, 2, 2, std::vector<std::uint8_t>(4, 0)).get(),
      doctest::Contains("empty domain"), std::invalid_argument);
  // mask shape mismatch
  CHECK_THROWS_AS(Grid::masked_rectangle(1.0, 1.0, 2, 2, std::vector<std::uint8_t>(3, 1)),
                  std::invalid_argument);
}

TEST_CASE("lp_mass examples") {
  auto g = Grid::interval(1.0, 1);
  CHECK(lp_mass(GridFunction::zeros(g), 2.0) == 0.0);
  CHECK(lp_mass(GridFunction(g, {1.0}), 2.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(lp_mass(GridFunction(g, {2.0}), 3.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK_THROWS_AS(lp_mass(GridFunction(g, {1.0}), 1.5), std::invalid_argument);
}

TEST_CASE("sup_norm examples") {
  auto g3 = Grid::interval(1.0, 3);
  CHECK(sup_norm(GridFunction::zeros(g3)) == 0.0);
  CHECK(sup_norm(GridFunction(g3, {1.0, -3.0, 2.0})) == 3.0);
  auto g1 = Grid::interval(1.0, 1);
  CHECK(sup_norm(GridFunction(g1, {0.5})) == 0.5);
}

TEST_CASE("lp_mass p-homogeneity property") {
  auto g = Grid::interval(2.0, 17);
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<double> v(17);
    for (auto& x : v) x = dist(rng);
    GridFunction u(g, v);
    const double c = dist(rng);
    if (c == 0.0) continue;
    for (double p : {2.0, 3.0, 4.5}) {
      const double lhs = lp_mass(scale(u, c), p);
      const double rhs = std::pow(std::fabs(c), p) * lp_mass(u, p);
      CHECK(lhs == doctest::Approx(rhs).epsilon(1e-12));
    }
  }
}

TEST_CASE("lp_mass strictly monotone under pointwise |u| increase") {
  auto g = Grid::interval(1.0, 5);
  GridFunction u(g, {0.1, -0.2, 0.3, -0.4, 0.5});
  GridFunction w(g, {0.1, -0.2, 0.7, -0.4, 0.5});
  CHECK(lp_mass(w, 3.0) > lp_mass(u, 3.0));
}

TEST_CASE("masked nodes are pinned to zero and never contribute") {
  std::vector<std::uint8_t> mask{1, 0, 1, 1};
  auto g = Grid::masked_rectangle(1.0, 1.0, 2, 2, mask);
  GridFunction a(g, {1.0, 0.0, 2.0, 3.0});
  // writing a value into the masked-out node is ignored
  GridFunction b(g, {1.0, 99.0, 2.0, 3.0});
  CHECK(b[1] == 0.0);
  CHECK(lp_mass(a, 2.0) == lp_mass(b, 2.0));
  CHECK(sup_norm(a) == sup_norm(b));
}

TEST_CASE("non-finite values are rejected") {
  auto g = Grid::interval(1.0, 2);
  CHECK_THROWS_AS(GridFunction(g, {1.0, std::nan("")}), std::invalid_argument);
  CHECK_THROWS_AS(GridFunction(g, {1.0, INFINITY}), std::invalid_argument);
}

TEST_CASE("snapshot round trip is bit exact") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "pflow_test_grid";
  fs::create_directories(dir);
  auto path = (dir / "snap.txt").string();

  auto g = Grid::rectangle(1.0, 2.0, 3, 2);
  GridFunction u(g, {0.1, -1.0 / 3.0, 0.25, 1e-7, M_PI, -2.0});
  write_snapshot(path, u, 3.5, 0.125);

  Snapshot s = read_snapshot(path);
  CHECK(s.dim == 2);
  CHECK(s.nx == 3);
  CHECK(s.ny == 2);
  CHECK(s.p == 3.5);
  CHECK(s.t == 0.125);
  GridFunction back = snapshot_function(s, g);
  for (long i = 0; i < u.size(); ++i) CHECK(back[i] == u[i]);
  fs::remove_all(dir);
}

TEST_CASE("mask file round trip") {
  namespace fs = std::filesystem;
  auto dir = fs::temp_directory_path() / "pflow_test_mask";
  fs::create_directories(dir);
  auto path = (dir / "mask.txt").string();

  std::vector<std::uint8_t> mask{1, 0, 1, 1, 1, 0};
  auto g = Grid::masked_rectangle(1.0, 1.0, 3, 2, mask);
  write_mask(path, *g);
  MaskData m = read_mask(path);
  CHECK(m.dim == 2);
  CHECK(m.nx == 3);
  CHECK(m.ny == 2);
  CHECK(m.mask == mask);
  fs::remove_all(dir);
}
