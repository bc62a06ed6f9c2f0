#include "oracles.hpp"

#include <cpme/herding.hpp>
#include <cpme/reference.hpp>

#include <doctest.h>

#include <algorithm>

using namespace cpme;

namespace {

EmbeddingFunctional two_atom(double a, double b, double ca, double cb, double ell) {
  EmbeddingFunctional e;
  e.atoms = Vector(2);
  e.atoms << a, b;
  e.coeffs = Vector(2);
  e.coeffs << ca, cb;
  e.kY = KernelSpec::gaussian(ell);
  return e;
}

HerdConfig config(Index m, std::vector<double> grid) {
  HerdConfig c;
  c.m = m;
  c.grid = std::move(grid);
  return c;
}

}  // namespace

TEST_SUITE("herding") {
  TEST_CASE("grids") {
    const auto g = linear_grid(-1.0, 1.0, 11);
    REQUIRE(g.size() == 11);
    CHECK(g.front() == -1.0);
    CHECK(g.back() == 1.0);
    CHECK(g[5] == doctest::Approx(0.0));
    CHECK_THROWS_AS(linear_grid(1.0, 1.0, 5), ConfigError);
    CHECK_THROWS_AS(linear_grid(0.0, 1.0, 1), ConfigError);

    Vector y(3);
    y << 0.0, 1.0, 2.0;
    const auto d = default_herd_grid(y, 5);
    CHECK(d.front() == doctest::Approx(-3.0));
    CHECK(d.back() == doctest::Approx(5.0));
    const auto c = default_herd_grid(Vector::Constant(4, 2.0), 3);
    CHECK(c.front() == 1.0);
    CHECK(c.back() == 3.0);
  }

  TEST_CASE("objective by hand") {
    const auto chi = two_atom(0.0, 1.0, 0.6, 0.4, 0.5);
    CHECK(herd_objective(chi, {}, 0.3) == doctest::Approx(chi(0.3)).epsilon(1e-15));
    CHECK(herd_objective(chi, {0.3}, 0.3) == doctest::Approx(chi(0.3) - 0.5).epsilon(1e-15));
    CHECK(herd_objective(chi, {0.3}, 0.3, true) == doctest::Approx(chi(0.3) - 1.0).epsilon(1e-15));
    const double k = oracle::gauss1(0.3, 0.8, 0.5);
    CHECK(herd_objective(chi, {0.3, 0.8}, 0.8) == doctest::Approx(chi(0.8) - (k + 1.0) / 3.0).epsilon(1e-14));
  }

  TEST_CASE("first step is the grid argmax of chi") {
    const auto chi = two_atom(-0.5, 1.0, 0.3, 0.7, 0.4);
    const auto grid = linear_grid(-2.0, 2.0, 41);
    const auto s = herd(chi, config(1, grid));
    REQUIRE(s.size() == 1);
    const auto best = *std::max_element(grid.begin(), grid.end(), [&](double a, double b) { return chi(a) < chi(b); });
    CHECK(s[0] == best);

    const auto peak = herd(two_atom(0.7, 0.7, 0.5, 0.5, 0.3), config(1, linear_grid(-1.0, 1.0, 21)));
    CHECK(peak[0] == doctest::Approx(0.7));
  }

  TEST_CASE("matches an exhaustive scan on 11-point grids") {
    const auto grid = linear_grid(-2.0, 3.0, 11);
    Rng rng(1);
    for (int trial = 0; trial < 25; ++trial) {
      const Index n_atoms = 2 + trial % 4;
      EmbeddingFunctional chi;
      chi.atoms = Vector(n_atoms);
      chi.coeffs = Vector(n_atoms);
      for (Index j = 0; j < n_atoms; ++j) {
        chi.atoms[j] = 2.0 * rng.normal();
        chi.coeffs[j] = rng.uniform();
      }
      chi.coeffs /= chi.coeffs.sum();
      const double ell = 0.3 + 0.2 * (trial % 5);
      chi.kY = KernelSpec::gaussian(ell);
      const Index m = 1 + trial % 9;
      const auto got = herd(chi, config(m, grid));
      const auto want = oracle::herd_scan(chi.atoms, chi.coeffs, ell, grid, m);
      CHECK(got == want);
      CHECK(reference::herd(chi, config(m, grid)) == got);
    }
  }

  TEST_CASE("ties go to the smaller grid value") {
    // Symmetric embedding: -1 and 1 score the same.
    const auto chi = two_atom(-1.0, 1.0, 0.5, 0.5, 0.2);
    const auto s = herd(chi, config(2, linear_grid(-2.0, 2.0, 5)));
    CHECK(s[0] == -1.0);
    CHECK(s[1] == 1.0);
  }

  TEST_CASE("samples stay on the grid and the herding error decreases") {
    // Atoms and weights chosen so no finite grid sample reproduces chi exactly.
    const auto chi = two_atom(-1.013, 1.507, 0.3719, 0.6281, 0.6);
    const auto grid = linear_grid(-4.0, 4.0, 401);
    const auto s = herd(chi, config(200, grid));
    for (double v : s) CHECK(std::find(grid.begin(), grid.end(), v) != grid.end());
    auto err = [&](Index m) {
      const std::vector<double> head(s.begin(), s.begin() + m);
      const auto e = empirical_embedding(head, chi.kY);
      const double cross = e.coeffs.dot(gram(chi.kY, Matrix(e.atoms), Matrix(chi.atoms)) * chi.coeffs);
      return e.squared_norm() - 2.0 * cross + chi.squared_norm();
    };
    CHECK(err(200) < err(20));
    CHECK(err(20) < err(2));
    CHECK(err(200) < 1e-3);
  }

  TEST_CASE("empirical embedding") {
    const auto e = empirical_embedding({0.0, 1.0, 1.0, 3.0}, KernelSpec::gaussian(1.0));
    CHECK(e.size() == 4);
    CHECK((e.coeffs.array() == 0.25).all());
    CHECK(e(1.0) == doctest::Approx(0.25 * (oracle::gauss1(0, 1, 1) + 2.0 + oracle::gauss1(3, 1, 1))).epsilon(1e-15));
    CHECK_THROWS_AS(empirical_embedding({}, KernelSpec::gaussian(1.0)), ConfigError);
  }

  TEST_CASE("invalid configurations") {
    const auto chi = two_atom(0.0, 1.0, 0.5, 0.5, 1.0);
    CHECK_THROWS_AS(herd(chi, config(0, {0.0, 1.0})), ConfigError);
    CHECK_THROWS_AS(herd(chi, config(3, {})), ConfigError);
    CHECK_THROWS_AS(herd(chi, config(3, {0.0, std::nan("")})), ConfigError);
  }
}
