#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "hjreach/binary_io.hpp"
#include "hjreach/dynamics.hpp"

namespace hjreach {

// Dense-grid level-set solve of the air3d avoid tube. First-order
// Lax-Friedrichs Hamiltonian with upwind dissipation, explicit Euler in
// time-to-go, and a per-step projection V <- min(V, l, V_prev) that enforces
// the tube (freeze inside the target) and monotonicity in tau.
struct GridSpec {
  std::array<int, 3> nodes{61, 61, 61};
  VectorXd lo, hi;        // empty: use the system box
  double dtau = 0.0;      // 0: largest step allowed by the CFL bound
  double cfl_safety = 0.8;
  int stored_slices = 21; // uniformly spaced in [0, horizon], endpoints kept
};

struct ValueGrid {
  SystemSpec system;  // dynamics the grid was solved with
  std::array<int, 3> nodes{};
  Eigen::Vector3d lo, hi;
  std::array<bool, 3> periodic{};
  std::vector<double> taus;
  std::vector<std::vector<double>> slices;  // slices[t][flat(i,j,k)]

  double spacing(int d) const {
    return periodic[d] ? (hi(d) - lo(d)) / nodes[d]
                       : (hi(d) - lo(d)) / (nodes[d] - 1);
  }
  double coord(int d, int i) const { return lo(d) + i * spacing(d); }
  std::size_t flat(int i, int j, int k) const {
    return (static_cast<std::size_t>(i) * nodes[1] + j) * nodes[2] + k;
  }
  std::size_t node_count() const {
    return static_cast<std::size_t>(nodes[0]) * nodes[1] * nodes[2];
  }
  double horizon() const { return taus.back(); }
};

namespace detail {

// |dH/dp_d| bounds over the grid box, from the bang-bang closed form
inline std::array<double, 3> air3d_alphas(const SystemSpec& spec,
                                          const Eigen::Vector3d& lo,
                                          const Eigen::Vector3d& hi) {
  const double max_x1 = std::max(std::abs(lo(0)), std::abs(hi(0)));
  const double max_x2 = std::max(std::abs(lo(1)), std::abs(hi(1)));
  return {spec.v_e + spec.v_p + spec.omega_max * max_x2,
          spec.v_p + spec.omega_max * max_x1, 2.0 * spec.omega_max};
}

}  // namespace detail

inline ValueGrid solve_air3d(const SystemSpec& spec, const GridSpec& grid) {
  if (spec.kind != SystemKind::kAir3d)
    throw std::invalid_argument("grid oracle supports air3d only");
  spec.validate();
  for (int d = 0; d < 3; ++d)
    if (grid.nodes[d] < 3)
      throw std::invalid_argument("grid needs at least 3 nodes per dimension");
  if (grid.stored_slices < 2)
    throw std::invalid_argument("need at least the tau=0 and tau=horizon slices");

  ValueGrid vg;
  vg.system = spec;
  vg.nodes = grid.nodes;
  vg.lo = grid.lo.size() ? Eigen::Vector3d(grid.lo) : Eigen::Vector3d(spec.lo);
  vg.hi = grid.hi.size() ? Eigen::Vector3d(grid.hi) : Eigen::Vector3d(spec.hi);
  vg.periodic = {spec.periodic[0], spec.periodic[1], spec.periodic[2]};

  const std::array<double, 3> h = {vg.spacing(0), vg.spacing(1), vg.spacing(2)};
  const std::array<double, 3> alpha = detail::air3d_alphas(spec, vg.lo, vg.hi);
  const double cfl_dtau =
      grid.cfl_safety / (alpha[0] / h[0] + alpha[1] / h[1] + alpha[2] / h[2]);
  double dtau = grid.dtau;
  if (dtau <= 0.0) {
    dtau = cfl_dtau;
  } else if (dtau > cfl_dtau * (1.0 + 1e-12)) {
    throw std::invalid_argument("dtau violates the CFL bound (max " +
                                std::to_string(cfl_dtau) + ")");
  }

  const int intervals = grid.stored_slices - 1;
  const double interval_len = spec.horizon / intervals;
  const int steps_per_interval =
      std::max(1, static_cast<int>(std::ceil(interval_len / dtau - 1e-12)));
  dtau = interval_len / steps_per_interval;

  const int n0 = vg.nodes[0], n1 = vg.nodes[1], n2 = vg.nodes[2];
  const std::size_t total = vg.node_count();

  std::array<std::vector<double>, 3> axis;
  for (int d = 0; d < 3; ++d) {
    axis[d].resize(vg.nodes[d]);
    for (int i = 0; i < vg.nodes[d]; ++i) axis[d][i] = vg.coord(d, i);
  }

  std::vector<double> boundary(total);
  for (int i = 0; i < n0; ++i)
    for (int j = 0; j < n1; ++j)
      for (int k = 0; k < n2; ++k)
        boundary[vg.flat(i, j, k)] =
            std::hypot(axis[0][i], axis[1][j]) - spec.collision_radius;

  std::vector<double> cur = boundary, next(total);
  vg.taus.push_back(0.0);
  vg.slices.push_back(cur);

  VectorXd x(3), pbar(3);
  for (int interval = 0; interval < intervals; ++interval) {
    for (int step = 0; step < steps_per_interval; ++step) {
#pragma omp parallel for schedule(static) firstprivate(x, pbar)
      for (int i = 0; i < n0; ++i) {
        for (int j = 0; j < n1; ++j) {
          for (int k = 0; k < n2; ++k) {
            const std::size_t idx = vg.flat(i, j, k);
            const double v = cur[idx];
            double pm[3], pp[3];
            const int ids[3] = {i, j, k};
            for (int d = 0; d < 3; ++d) {
              const int nd = vg.nodes[d];
              const std::size_t stride =
                  d == 0 ? static_cast<std::size_t>(n1) * n2
                         : (d == 1 ? static_cast<std::size_t>(n2) : 1);
              double vminus, vplus;
              if (vg.periodic[d]) {
                const int im = (ids[d] + nd - 1) % nd;
                const int ip = (ids[d] + 1) % nd;
                vminus = cur[idx + (im - ids[d]) * stride];
                vplus = cur[idx + (ip - ids[d]) * stride];
                pm[d] = (v - vminus) / h[d];
                pp[d] = (vplus - v) / h[d];
              } else if (ids[d] == 0) {
                vplus = cur[idx + stride];
                pm[d] = pp[d] = (vplus - v) / h[d];  // one-sided at the face
              } else if (ids[d] == nd - 1) {
                vminus = cur[idx - stride];
                pm[d] = pp[d] = (v - vminus) / h[d];
              } else {
                vminus = cur[idx - stride];
                vplus = cur[idx + stride];
                pm[d] = (v - vminus) / h[d];
                pp[d] = (vplus - v) / h[d];
              }
            }
            x(0) = axis[0][i];
            x(1) = axis[1][j];
            x(2) = axis[2][k];
            pbar(0) = 0.5 * (pm[0] + pp[0]);
            pbar(1) = 0.5 * (pm[1] + pp[1]);
            pbar(2) = 0.5 * (pm[2] + pp[2]);
            const double ham = hamiltonian(spec, x, pbar);
            const double diss = 0.5 * (alpha[0] * (pp[0] - pm[0]) +
                                       alpha[1] * (pp[1] - pm[1]) +
                                       alpha[2] * (pp[2] - pm[2]));
            double vnew = v + dtau * (ham + diss);
            vnew = std::min(vnew, boundary[idx]);  // tube projection
            vnew = std::min(vnew, v);              // monotone in tau
            next[idx] = vnew;
          }
        }
      }
      cur.swap(next);
    }
    vg.taus.push_back((interval + 1) * interval_len);
    vg.slices.push_back(cur);
  }
  return vg;
}

struct GridQuery {
  double value = 0.0;
  Eigen::Vector3d gradient{0, 0, 0};
};

namespace detail {

// central difference at a node, one-sided at non-periodic faces
inline double nodal_gradient(const ValueGrid& g, const std::vector<double>& s,
                             int i, int j, int k, int d) {
  const int ids[3] = {i, j, k};
  const int nd = g.nodes[d];
  const double h = g.spacing(d);
  auto at = [&](int di) {
    int id0 = i, id1 = j, id2 = k;
    (d == 0 ? id0 : d == 1 ? id1 : id2) = di;
    return s[g.flat(id0, id1, id2)];
  };
  if (g.periodic[d]) {
    const int im = (ids[d] + nd - 1) % nd;
    const int ip = (ids[d] + 1) % nd;
    return (at(ip) - at(im)) / (2 * h);
  }
  if (ids[d] == 0) return (at(1) - at(0)) / h;
  if (ids[d] == nd - 1) return (at(nd - 1) - at(nd - 2)) / h;
  return (at(ids[d] + 1) - at(ids[d] - 1)) / (2 * h);
}

struct CellCoord {
  int i0, i1;
  double frac;
};

inline CellCoord locate(const ValueGrid& g, int d, double v) {
  const int nd = g.nodes[d];
  const double h = g.spacing(d);
  if (g.periodic[d]) {
    const double period = g.hi(d) - g.lo(d);
    double u = (v - g.lo(d)) / h;
    u -= std::floor(u * h / period) * (period / h);
    int i0 = static_cast<int>(std::floor(u));
    double frac = u - i0;
    i0 = ((i0 % nd) + nd) % nd;
    return {i0, (i0 + 1) % nd, frac};
  }
  const double span = g.hi(d) - g.lo(d);
  const double slack = 1e-9 * span;
  if (v < g.lo(d) - slack || v > g.hi(d) + slack)
    throw std::invalid_argument("interpolation point outside grid bounds");
  double u = std::clamp((v - g.lo(d)) / h, 0.0, static_cast<double>(nd - 1));
  int i0 = std::min(static_cast<int>(std::floor(u)), nd - 2);
  return {i0, i0 + 1, u - i0};
}

}  // namespace detail

// Multilinear in space, linear in tau; the gradient interpolates nodal
// central differences.
inline GridQuery grid_interpolate(const ValueGrid& g, const VectorXd& x,
                                  double tau) {
  if (x.size() != 3) throw std::invalid_argument("grid query needs 3-D state");
  const double tmax = g.taus.back();
  if (tau < -1e-9 * tmax || tau > tmax * (1.0 + 1e-9))
    throw std::invalid_argument("tau outside [0, horizon]");
  tau = std::clamp(tau, 0.0, tmax);
  std::size_t hi_slice = 1;
  while (hi_slice + 1 < g.taus.size() && g.taus[hi_slice] < tau) ++hi_slice;
  const std::size_t lo_slice = hi_slice - 1;
  const double span = g.taus[hi_slice] - g.taus[lo_slice];
  const double wt = span > 0 ? (tau - g.taus[lo_slice]) / span : 0.0;

  const detail::CellCoord c0 = detail::locate(g, 0, x(0));
  const detail::CellCoord c1 = detail::locate(g, 1, x(1));
  const detail::CellCoord c2 = detail::locate(g, 2, x(2));

  GridQuery out;
  for (int s = 0; s < 2; ++s) {
    const std::vector<double>& slice = g.slices[s == 0 ? lo_slice : hi_slice];
    const double ws = s == 0 ? 1.0 - wt : wt;
    if (ws == 0.0) continue;
    double val = 0.0;
    Eigen::Vector3d grad{0, 0, 0};
    for (int a = 0; a < 2; ++a)
      for (int b = 0; b < 2; ++b)
        for (int c = 0; c < 2; ++c) {
          const int i = a ? c0.i1 : c0.i0;
          const int j = b ? c1.i1 : c1.i0;
          const int k = c ? c2.i1 : c2.i0;
          const double w = (a ? c0.frac : 1 - c0.frac) *
                           (b ? c1.frac : 1 - c1.frac) *
                           (c ? c2.frac : 1 - c2.frac);
          if (w == 0.0) continue;
          val += w * slice[g.flat(i, j, k)];
          for (int d = 0; d < 3; ++d)
            grad(d) += w * detail::nodal_gradient(g, slice, i, j, k, d);
        }
    out.value += ws * val;
    out.gradient += ws * grad;
  }
  return out;
}

inline double grid_value(const ValueGrid& g, const VectorXd& x, double tau) {
  return grid_interpolate(g, x, tau).value;
}

// ---- grid file format ----

namespace detail {
constexpr char kGridMagic[8] = {'H', 'J', 'R', 'G', 'D', 'v', '0', '1'};
}

inline void save_grid(std::ostream& os, const ValueGrid& g) {
  detail::write_bytes(os, detail::kGridMagic, 8);
  write_string(os, g.system.name);
  write_f64(os, g.system.v_e);
  write_f64(os, g.system.v_p);
  write_f64(os, g.system.omega_max);
  write_f64(os, g.system.collision_radius);
  write_f64(os, g.system.horizon);
  write_u32(os, g.system.convention == GameConvention::kAvoid ? 0 : 1);
  write_u32(os, 3);
  for (int d = 0; d < 3; ++d) {
    write_u32(os, static_cast<std::uint32_t>(g.nodes[d]));
    write_f64(os, g.lo(d));
    write_f64(os, g.hi(d));
    write_u32(os, g.periodic[d] ? 1 : 0);
  }
  write_u32(os, static_cast<std::uint32_t>(g.taus.size()));
  for (double t : g.taus) write_f64(os, t);
  for (const auto& slice : g.slices)
    for (double v : slice) write_f64(os, v);
  os.flush();
  if (!os) throw SerializationError("grid write failed");
}

inline ValueGrid load_grid(std::istream& is) {
  char magic[8];
  detail::read_bytes(is, magic, 8);
  if (std::memcmp(magic, detail::kGridMagic, 8) != 0)
    throw SerializationError("bad grid magic (wrong file or version)");
  ValueGrid g;
  g.system = make_system(read_string(is, 64));
  g.system.v_e = read_f64(is);
  g.system.v_p = read_f64(is);
  g.system.omega_max = read_f64(is);
  g.system.collision_radius = read_f64(is);
  g.system.horizon = read_f64(is);
  g.system.convention =
      read_u32(is) == 0 ? GameConvention::kAvoid : GameConvention::kReach;
  if (read_u32(is) != 3) throw SerializationError("grid dimension != 3");
  for (int d = 0; d < 3; ++d) {
    g.nodes[d] = static_cast<int>(read_u32(is));
    if (g.nodes[d] < 3 || g.nodes[d] > 4096)
      throw SerializationError("grid node count out of range");
    g.lo(d) = read_f64(is);
    g.hi(d) = read_f64(is);
    g.periodic[d] = read_u32(is) != 0;
  }
  const std::uint32_t ntau = read_u32(is);
  if (ntau < 2 || ntau > 100000) throw SerializationError("bad tau count");
  g.taus.resize(ntau);
  for (auto& t : g.taus) t = read_f64(is);
  g.slices.assign(ntau, std::vector<double>(g.node_count()));
  for (auto& slice : g.slices)
    for (double& v : slice) v = read_f64(is);
  return g;
}

inline void save_grid_file(const std::filesystem::path& p, const ValueGrid& g) {
  std::ofstream os(p, std::ios::binary | std::ios::trunc);
  if (!os) throw SerializationError("cannot open '" + p.string() + "'");
  save_grid(os, g);
}

inline ValueGrid load_grid_file(const std::filesystem::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw SerializationError("cannot open '" + p.string() + "'");
  return load_grid(is);
}

}  // namespace hjreach
