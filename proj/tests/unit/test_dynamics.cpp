#include <catch2/catch_amalgamated.hpp>
#include <cmath>
#include <numbers>
#include <random>

#include "hjreach/dynamics.hpp"
#include "hjreach/rng.hpp"

using namespace hjreach;

namespace {

// Brute-force game value over gridded inputs: max over joint control
// combinations, then min over joint disturbance combinations (avoid
// convention). Independent of the closed-form path.
double brute_force_hamiltonian(const SystemSpec& spec, const VectorXd& x,
                               const VectorXd& p, int npts) {
  VectorXd f0;
  drift(spec, x, f0);
  const double base = p.dot(f0);
  std::vector<double> coef(spec.num_inputs());
  std::vector<int> ctrl, dist;
  for (int i = 0; i < spec.num_inputs(); ++i) {
    VectorXd g;
    input_field(spec, x, i, g);
    coef[i] = p.dot(g);
    (spec.roles[i] == InputRole::kControl ? ctrl : dist).push_back(i);
  }
  std::vector<double> grid(npts);
  for (int k = 0; k < npts; ++k)
    grid[k] = -spec.omega_max + 2.0 * spec.omega_max * k / (npts - 1);

  const auto enumerate = [&](const std::vector<int>& inputs, auto&& fn) {
    std::vector<int> idx(inputs.size(), 0);
    while (true) {
      double term = 0.0;
      for (std::size_t j = 0; j < inputs.size(); ++j)
        term += coef[inputs[j]] * grid[idx[j]];
      fn(term);
      std::size_t j = 0;
      while (j < idx.size() && ++idx[j] == npts) idx[j++] = 0;
      if (j == idx.size()) break;
      if (idx.empty()) break;
    }
  };

  double outer = std::numeric_limits<double>::infinity();
  bool outer_any = false;
  enumerate(dist, [&](double dterm) {
    double inner = -std::numeric_limits<double>::infinity();
    enumerate(ctrl, [&](double cterm) { inner = std::max(inner, cterm); });
    outer = std::min(outer, dterm + inner);
    outer_any = true;
  });
  (void)outer_any;
  return base + outer;
}

VectorXd random_state(std::mt19937_64& gen, const SystemSpec& spec) {
  VectorXd x(spec.state_dim);
  for (int d = 0; d < spec.state_dim; ++d)
    x(d) = uniform(gen, spec.lo(d), spec.hi(d));
  return x;
}

VectorXd random_costate(std::mt19937_64& gen, int n, double scale) {
  VectorXd p(n);
  for (int d = 0; d < n; ++d) p(d) = uniform(gen, -scale, scale);
  return p;
}

}  // namespace

TEST_CASE("boundary values") {
  const SystemSpec a3 = air3d();
  VectorXd x(3);
  x << 0.25, 0.0, 1.234;
  REQUIRE(boundary_value(a3, x) == Catch::Approx(0.0).margin(1e-15));
  x << 0.0, 0.0, -2.0;
  REQUIRE(boundary_value(a3, x) == Catch::Approx(-0.25));

  const SystemSpec v9 = vehicles9d();
  VectorXd y = VectorXd::Zero(9);
  y(3) = 1.0;  // vehicle 2 at (1, 0)
  y(7) = 1.0;  // vehicle 3 at (0, 1)
  REQUIRE(boundary_value(v9, y) == Catch::Approx(1.0 - 0.25));

  // 9-D boundary equals the min of the three pairwise 6-D boundaries
  const SystemSpec v6 = vehicles6d();
  std::mt19937_64 gen(1);
  for (int i = 0; i < 50; ++i) {
    const VectorXd s = random_state(gen, v9);
    double m = std::numeric_limits<double>::infinity();
    const int pairs[3][2] = {{0, 1}, {0, 2}, {1, 2}};
    for (auto [va, vb] : pairs) {
      VectorXd sub(6);
      sub << s.segment(3 * va, 3), s.segment(3 * vb, 3);
      m = std::min(m, boundary_value(v6, sub));
    }
    REQUIRE(boundary_value(v9, s) == Catch::Approx(m).margin(1e-14));
  }

  REQUIRE_THROWS_AS(boundary_value(a3, VectorXd::Zero(2)), std::invalid_argument);
}

TEST_CASE("flow evaluates the stated vector fields") {
  const SystemSpec a3 = air3d();
  VectorXd x = VectorXd::Zero(3);
  VectorXd u = VectorXd::Zero(1), d = VectorXd::Zero(1);
  VectorXd f = flow(a3, x, u, d);
  REQUIRE(f.cwiseAbs().maxCoeff() == Catch::Approx(0.0).margin(1e-15));

  x << 0.0, 0.0, std::numbers::pi;
  f = flow(a3, x, u, d);
  REQUIRE(f(0) == Catch::Approx(-1.5));
  REQUIRE(std::abs(f(1)) < 1e-12);
  REQUIRE(f(2) == 0.0);

  const SystemSpec v6 = vehicles6d();
  VectorXd y = VectorXd::Zero(6);
  y(2) = std::numbers::pi / 2;
  f = flow(v6, y, VectorXd::Zero(1), VectorXd::Zero(1));
  REQUIRE(std::abs(f(0)) < 1e-12);
  REQUIRE(f(1) == Catch::Approx(0.75));

  // out-of-bound input rejected
  u(0) = 3.5;
  REQUIRE_THROWS_AS(flow(a3, x, u, d), std::invalid_argument);
}

TEST_CASE("hamiltonian closed form: zero costate and the worked example") {
  const SystemSpec a3 = air3d();
  std::mt19937_64 gen(2);
  for (int i = 0; i < 10; ++i)
    REQUIRE(hamiltonian(a3, random_state(gen, a3), VectorXd::Zero(3)) == 0.0);

  VectorXd x(3), p(3);
  x << 0.0, 1.0, std::numbers::pi / 2;
  p << 1.0, 0.0, 0.0;
  REQUIRE(hamiltonian(a3, x, p) == Catch::Approx(2.25).margin(1e-12));
  REQUIRE(brute_force_hamiltonian(a3, x, p, 201) ==
          Catch::Approx(2.25).margin(1e-12));
}

TEST_CASE("hamiltonian equals brute force over input grids") {
  std::mt19937_64 gen(3);
  for (const char* name : {"air3d", "vehicles6d", "vehicles9d"}) {
    const SystemSpec spec = make_system(name);
    const int npts = spec.num_inputs() > 2 ? 21 : 51;
    for (int i = 0; i < 200; ++i) {
      const VectorXd x = random_state(gen, spec);
      const VectorXd p = random_costate(gen, spec.state_dim, 5.0);
      const double analytic = hamiltonian(spec, x, p);
      const double brute = brute_force_hamiltonian(spec, x, p, npts);
      REQUIRE(std::abs(analytic - brute) < 1e-2 * (1.0 + p.norm()));
    }
  }
}

TEST_CASE("substitution identity: H equals <p, f(x, u*, d*)>") {
  std::mt19937_64 gen(4);
  for (const char* name : {"air3d", "vehicles6d", "vehicles9d"}) {
    SystemSpec spec = make_system(name);
    for (GameConvention conv : {GameConvention::kAvoid, GameConvention::kReach}) {
      spec.convention = conv;
      for (int i = 0; i < 100; ++i) {
        const VectorXd x = random_state(gen, spec);
        const VectorXd p = random_costate(gen, spec.state_dim, 3.0);
        VectorXd u, d;
        optimal_inputs(spec, x, p, u, d);
        const double h = hamiltonian(spec, x, p);
        const double sub = p.dot(flow(spec, x, u, d));
        REQUIRE(std::abs(h - sub) <= 1e-12 * (1.0 + std::abs(h)));
      }
    }
  }
}

TEST_CASE("bang-bang inputs: worked example and tie-breaks") {
  const SystemSpec a3 = air3d();
  VectorXd x(3), p(3);
  x << 0.0, 1.0, std::numbers::pi / 2;
  p << 1.0, 0.0, 0.0;
  // a = p1*x2 - p2*x1 - p3 = 1 > 0 -> omega_e = +3; b = p3 = 0 -> tie -> +3
  REQUIRE(optimal_control(a3, x, p)(0) == 3.0);
  REQUIRE(optimal_disturbance(a3, x, p)(0) == 3.0);
  const VectorXd f = flow(a3, x, optimal_control(a3, x, p),
                          optimal_disturbance(a3, x, p));
  REQUIRE(p.dot(f) == Catch::Approx(2.25).margin(1e-12));

  p << 0.0, 0.0, 0.5;  // p3 > 0 -> disturbance -3
  REQUIRE(optimal_disturbance(a3, x, p)(0) == -3.0);

  VectorXd x0 = VectorXd::Zero(3), p0 = VectorXd::Zero(3);
  REQUIRE(optimal_control(a3, x0, p0)(0) == 3.0);  // a = 0 -> tie -> +3
}

TEST_CASE("hamiltonian is positively homogeneous; bang-bang is scale invariant") {
  std::mt19937_64 gen(5);
  for (const char* name : {"air3d", "vehicles9d"}) {
    const SystemSpec spec = make_system(name);
    for (int i = 0; i < 50; ++i) {
      const VectorXd x = random_state(gen, spec);
      const VectorXd p = random_costate(gen, spec.state_dim, 2.0);
      const double c = uniform(gen, 0.1, 10.0);
      const double h1 = hamiltonian(spec, x, p);
      const double hc = hamiltonian(spec, x, (c * p).eval());
      REQUIRE(hc == Catch::Approx(c * h1).margin(1e-10 * (1 + std::abs(c * h1))));
      REQUIRE(optimal_control(spec, x, p) ==
              optimal_control(spec, x, (c * p).eval()));
      REQUIRE(optimal_disturbance(spec, x, p) ==
              optimal_disturbance(spec, x, (c * p).eval()));
    }
  }
}

TEST_CASE("normalize and denormalize") {
  const SystemSpec a3 = air3d();
  const VectorXd mid = 0.5 * (a3.lo + a3.hi);
  REQUIRE(normalize(a3, mid).cwiseAbs().maxCoeff() < 1e-15);

  // upper corner -> all ones (use the angle just below +pi: +pi wraps to -pi)
  VectorXd corner = a3.hi;
  REQUIRE((normalize(a3, corner).head(2) - Eigen::Vector2d::Ones()).cwiseAbs().maxCoeff() <
          1e-15);

  std::mt19937_64 gen(6);
  for (int i = 0; i < 1000; ++i) {
    const VectorXd x = random_state(gen, a3);
    const VectorXd back = denormalize(a3, normalize(a3, x));
    REQUIRE((back - x).cwiseAbs().maxCoeff() < 1e-12);
  }

  VectorXd out = mid;
  out(0) = 1.5;
  REQUIRE_THROWS_AS(normalize(a3, out), std::invalid_argument);

  // periodic coordinate wraps instead of erroring
  VectorXd spin = mid;
  spin(2) = 7.0;
  REQUIRE_NOTHROW(normalize(a3, spin));
  const VectorXd w = wrap_angles(a3, spin);
  REQUIRE(w(2) >= a3.lo(2));
  REQUIRE(w(2) < a3.lo(2) + 2 * std::numbers::pi);
  REQUIRE(std::abs(std::remainder(w(2) - 7.0, 2 * std::numbers::pi)) < 1e-12);
}

TEST_CASE("reach convention flips the optimizing players") {
  SystemSpec a3 = air3d();
  a3.convention = GameConvention::kReach;
  VectorXd x(3), p(3);
  x << 0.0, 1.0, std::numbers::pi / 2;
  p << 1.0, 0.0, 0.0;
  // control now minimizes: a = 1 > 0 -> omega_e = -3
  REQUIRE(optimal_control(a3, x, p)(0) == -3.0);
  // H = -0.75 - 3|1| + 3|0| = -3.75
  REQUIRE(hamiltonian(a3, x, p) == Catch::Approx(-3.75).margin(1e-12));
}
