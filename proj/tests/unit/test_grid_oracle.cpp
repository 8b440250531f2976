#include <catch2/catch_amalgamated.hpp>
#include <numbers>
#include <sstream>

#include "hjreach/grid_oracle.hpp"
#include "hjreach/rng.hpp"

using namespace hjreach;

namespace {
ValueGrid small_oracle(std::array<int, 3> nodes = {21, 21, 20},
                       int slices = 6) {
  GridSpec gs;
  gs.nodes = nodes;
  gs.stored_slices = slices;
  return solve_air3d(air3d(), gs);
}
}  // namespace

TEST_CASE("tau=0 slice equals the boundary function exactly") {
  const ValueGrid g = small_oracle();
  REQUIRE(g.taus.front() == 0.0);
  VectorXd x(3);
  for (int i = 0; i < g.nodes[0]; ++i)
    for (int j = 0; j < g.nodes[1]; ++j)
      for (int k = 0; k < g.nodes[2]; ++k) {
        x << g.coord(0, i), g.coord(1, j), g.coord(2, k);
        REQUIRE(g.slices[0][g.flat(i, j, k)] ==
                boundary_value(g.system, x));
      }
}

TEST_CASE("value is pointwise nonincreasing in tau and the sub-zero set grows") {
  const ValueGrid g = small_oracle();
  for (std::size_t t = 1; t < g.slices.size(); ++t)
    for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
      REQUIRE(g.slices[t][idx] <= g.slices[t - 1][idx]);
      if (g.slices[t - 1][idx] <= 0.0) REQUIRE(g.slices[t][idx] <= 0.0);
    }
  // the tube actually grows: strictly more sub-zero nodes at the horizon
  long n0 = 0, n1 = 0;
  for (std::size_t idx = 0; idx < g.node_count(); ++idx) {
    n0 += g.slices.front()[idx] <= 0.0;
    n1 += g.slices.back()[idx] <= 0.0;
  }
  REQUIRE(n1 > n0);
}

TEST_CASE("interpolation: node queries, periodicity, tau blending") {
  const ValueGrid g = small_oracle();
  VectorXd x(3);
  x << g.coord(0, 7), g.coord(1, 12), g.coord(2, 5);
  for (std::size_t t = 0; t < g.taus.size(); ++t) {
    const double v = grid_value(g, x, g.taus[t]);
    REQUIRE(v == Catch::Approx(g.slices[t][g.flat(7, 12, 5)]).margin(1e-12));
  }

  // theta = -pi and theta = +pi are the same point
  std::mt19937_64 gen(3);
  for (int i = 0; i < 50; ++i) {
    VectorXd a(3);
    a << uniform(gen, -1, 1), uniform(gen, -1, 1), -std::numbers::pi;
    VectorXd b = a;
    b(2) = std::numbers::pi;
    const double tau = uniform(gen, 0, g.horizon());
    REQUIRE(grid_value(g, a, tau) ==
            Catch::Approx(grid_value(g, b, tau)).margin(1e-12));
  }

  // midpoint between stored slices is the average of the two slice values
  x << g.coord(0, 3), g.coord(1, 4), g.coord(2, 2);
  const double tmid = 0.5 * (g.taus[1] + g.taus[2]);
  const double expect = 0.5 * (g.slices[1][g.flat(3, 4, 2)] +
                               g.slices[2][g.flat(3, 4, 2)]);
  REQUIRE(grid_value(g, x, tmid) == Catch::Approx(expect).margin(1e-12));

  VectorXd out(3);
  out << 1.5, 0.0, 0.0;
  REQUIRE_THROWS_AS(grid_value(g, out, 0.1), std::invalid_argument);
  x << 0.1, 0.1, 0.1;
  REQUIRE_THROWS_AS(grid_value(g, x, g.horizon() + 0.5), std::invalid_argument);
}

TEST_CASE("constant grid has zero gradient; cone slice gradient approximates grad l") {
  ValueGrid g = small_oracle({11, 11, 10}, 3);
  for (auto& slice : g.slices)
    for (double& v : slice) v = 2.5;
  std::mt19937_64 gen(5);
  for (int i = 0; i < 20; ++i) {
    VectorXd x(3);
    x << uniform(gen, -1, 1), uniform(gen, -1, 1), uniform(gen, -3, 3);
    const GridQuery q = grid_interpolate(g, x, uniform(gen, 0, g.horizon()));
    REQUIRE(q.value == 2.5);
    REQUIRE(q.gradient.cwiseAbs().maxCoeff() == 0.0);
  }

  // on the tau=0 slice the oracle is the cone |(x1,x2)| - R
  const ValueGrid g2 = small_oracle({41, 41, 40}, 3);
  for (int i = 0; i < 30; ++i) {
    VectorXd x(3);
    do {
      x << uniform(gen, -0.9, 0.9), uniform(gen, -0.9, 0.9), uniform(gen, -3, 3);
    } while (std::hypot(x(0), x(1)) < 0.3);  // stay away from the cone apex
    const GridQuery q = grid_interpolate(g2, x, 0.0);
    const double r = std::hypot(x(0), x(1));
    REQUIRE(q.gradient(0) == Catch::Approx(x(0) / r).margin(0.05));
    REQUIRE(q.gradient(1) == Catch::Approx(x(1) / r).margin(0.05));
    REQUIRE(std::abs(q.gradient(2)) < 1e-9);
  }
}

TEST_CASE("CFL-violating dtau is rejected at construction") {
  GridSpec gs;
  gs.nodes = {21, 21, 20};
  gs.dtau = 0.1;  // far above the bound at this resolution
  REQUIRE_THROWS_AS(solve_air3d(air3d(), gs), std::invalid_argument);
  gs.dtau = 1e-3;
  REQUIRE_NOTHROW(solve_air3d(air3d(), gs));
  REQUIRE_THROWS_AS(solve_air3d(vehicles6d(), gs), std::invalid_argument);
}

TEST_CASE("nested-grid self-convergence at first order") {
  GridSpec c;
  c.stored_slices = 3;
  c.nodes = {11, 11, 10};
  const ValueGrid g11 = solve_air3d(air3d(), c);
  c.nodes = {21, 21, 20};
  const ValueGrid g21 = solve_air3d(air3d(), c);
  c.nodes = {41, 41, 40};
  const ValueGrid g41 = solve_air3d(air3d(), c);

  // coarse-grid nodes coincide with every 2nd / 4th fine-grid node
  double d1 = 0.0, d2 = 0.0;
  long cnt = 0;
  const std::size_t t = g11.taus.size() - 1;
  for (int i = 0; i < 11; ++i)
    for (int j = 0; j < 11; ++j)
      for (int k = 0; k < 10; ++k) {
        const double v11 = g11.slices[t][g11.flat(i, j, k)];
        const double v21 = g21.slices[t][g21.flat(2 * i, 2 * j, 2 * k)];
        const double v41 = g41.slices[t][g41.flat(4 * i, 4 * j, 4 * k)];
        d1 += std::abs(v11 - v21);
        d2 += std::abs(v21 - v41);
        ++cnt;
      }
  d1 /= cnt;
  d2 /= cnt;
  CAPTURE(d1, d2);
  REQUIRE(d1 / d2 > 1.2);
}

TEST_CASE("grid save/load round-trip is bit-exact") {
  const ValueGrid g = small_oracle({11, 11, 10}, 4);
  std::stringstream ss(std::ios::in | std::ios::out | std::ios::binary);
  save_grid(ss, g);
  const ValueGrid back = load_grid(ss);
  REQUIRE(back.nodes == g.nodes);
  REQUIRE(back.taus == g.taus);
  REQUIRE(back.system.name == g.system.name);
  REQUIRE(back.system.horizon == g.system.horizon);
  for (std::size_t t = 0; t < g.slices.size(); ++t)
    REQUIRE(back.slices[t] == g.slices[t]);

  std::istringstream bad(std::string("NOPE"), std::ios::binary);
  REQUIRE_THROWS_AS(load_grid(bad), SerializationError);
}
