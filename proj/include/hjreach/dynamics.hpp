#pragma once

#include <Eigen/Core>
#include <cmath>
#include <numbers>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hjreach/net.hpp"

namespace hjreach {

enum class InputRole { kControl, kDisturbance };

// Which player maximizes the value. kAvoid (default): the control steers
// away from the target set (max over control, min over disturbance), the
// convention under which collision-avoidance tubes are non-degenerate.
// kReach flips the ordering (min over control, max over disturbance).
enum class GameConvention { kAvoid, kReach };

enum class SystemKind { kAir3d, kVehicles6d, kVehicles9d };

// Dynamics descriptor for one of the registered vehicle systems.
//   air3d       relative pursuit-evasion, state (x1, x2, theta)
//   vehicles6d  joint two-vehicle state (vehicle 1 pursuer, vehicle 2 evader)
//   vehicles9d  joint three-vehicle state (vehicle 1 pursuer, 2 and 3 evaders)
// All inputs are scalar turn rates bounded by omega_max; roles_ lists them in
// dynamics order.
struct SystemSpec {
  std::string name;
  SystemKind kind = SystemKind::kAir3d;
  int state_dim = 0;
  VectorXd lo, hi;
  std::vector<bool> periodic;  // period 2*pi
  std::vector<std::string> dim_names;
  double v_e = 0.75;           // evader speed [m/s]
  double v_p = 0.75;           // pursuer speed [m/s]
  double omega_max = 3.0;      // turn-rate bound [rad/s]
  double collision_radius = 0.25;
  double horizon = 1.0;        // T_f [s]
  std::vector<InputRole> roles;
  GameConvention convention = GameConvention::kAvoid;

  int num_inputs() const { return static_cast<int>(roles.size()); }
  int num_controls() const {
    int n = 0;
    for (InputRole r : roles) n += (r == InputRole::kControl);
    return n;
  }
  int num_disturbances() const { return num_inputs() - num_controls(); }

  void validate() const {
    if (state_dim <= 0 || lo.size() != state_dim || hi.size() != state_dim ||
        static_cast<int>(periodic.size()) != state_dim)
      throw std::invalid_argument("system '" + name + "': inconsistent shapes");
    for (int d = 0; d < state_dim; ++d)
      if (!(lo(d) < hi(d)))
        throw std::invalid_argument("system '" + name + "': empty box dim " +
                                    std::to_string(d));
    if (omega_max <= 0.0 || collision_radius <= 0.0 || horizon <= 0.0 ||
        v_e < 0.0 || v_p < 0.0)
      throw std::invalid_argument("system '" + name + "': parameter out of range");
  }
};

namespace detail {
constexpr double kTwoPi = 2.0 * std::numbers::pi;
}

inline SystemSpec air3d() {
  SystemSpec s;
  s.name = "air3d";
  s.kind = SystemKind::kAir3d;
  s.state_dim = 3;
  s.lo = VectorXd(3);
  s.hi = VectorXd(3);
  s.lo << -1.0, -1.0, -std::numbers::pi;
  s.hi << 1.0, 1.0, std::numbers::pi;
  s.periodic = {false, false, true};
  s.dim_names = {"x1", "x2", "theta"};
  s.roles = {InputRole::kControl, InputRole::kDisturbance};  // omega_e, omega_p
  return s;
}

inline SystemSpec vehicles6d() {
  SystemSpec s;
  s.name = "vehicles6d";
  s.kind = SystemKind::kVehicles6d;
  s.state_dim = 6;
  s.lo = VectorXd(6);
  s.hi = VectorXd(6);
  s.lo << -1, -1, -std::numbers::pi, -1, -1, -std::numbers::pi;
  s.hi << 1, 1, std::numbers::pi, 1, 1, std::numbers::pi;
  s.periodic = {false, false, true, false, false, true};
  s.dim_names = {"x1", "x2", "x3", "x4", "x5", "x6"};
  s.roles = {InputRole::kDisturbance, InputRole::kControl};  // omega_p, omega_e
  return s;
}

inline SystemSpec vehicles9d() {
  SystemSpec s;
  s.name = "vehicles9d";
  s.kind = SystemKind::kVehicles9d;
  s.state_dim = 9;
  s.lo = VectorXd(9);
  s.hi = VectorXd(9);
  s.lo << -1, -1, -std::numbers::pi, -1, -1, -std::numbers::pi, -1, -1,
      -std::numbers::pi;
  s.hi << 1, 1, std::numbers::pi, 1, 1, std::numbers::pi, 1, 1,
      std::numbers::pi;
  s.periodic = {false, false, true, false, false, true, false, false, true};
  s.dim_names = {"x1", "x2", "x3", "x4", "x5", "x6", "x7", "x8", "x9"};
  // vehicle 1 is the pursuer (disturbance), vehicles 2 and 3 are evaders
  s.roles = {InputRole::kDisturbance, InputRole::kControl, InputRole::kControl};
  return s;
}

inline SystemSpec make_system(std::string_view name) {
  if (name == "air3d") return air3d();
  if (name == "vehicles6d") return vehicles6d();
  if (name == "vehicles9d") return vehicles9d();
  throw std::invalid_argument("unknown system '" + std::string(name) +
                              "' (known: air3d, vehicles6d, vehicles9d)");
}

namespace detail {

inline void check_state(const SystemSpec& spec, const VectorXd& x) {
  if (x.size() != spec.state_dim)
    throw std::invalid_argument("state dimension " + std::to_string(x.size()) +
                                " != system dimension " +
                                std::to_string(spec.state_dim));
}

// vehicle speed by block index: vehicle 0 is the pursuer in the joint systems
inline double vehicle_speed(const SystemSpec& spec, int vehicle) {
  if (spec.kind == SystemKind::kAir3d) return spec.v_p;
  return vehicle == 0 ? spec.v_p : spec.v_e;
}

}  // namespace detail

// Signed distance to the target set; negative inside.
inline double boundary_value(const SystemSpec& spec, const VectorXd& x) {
  detail::check_state(spec, x);
  switch (spec.kind) {
    case SystemKind::kAir3d:
      return std::hypot(x(0), x(1)) - spec.collision_radius;
    case SystemKind::kVehicles6d:
      return std::hypot(x(0) - x(3), x(1) - x(4)) - spec.collision_radius;
    case SystemKind::kVehicles9d: {
      const double d01 = std::hypot(x(0) - x(3), x(1) - x(4));
      const double d02 = std::hypot(x(0) - x(6), x(1) - x(7));
      const double d12 = std::hypot(x(3) - x(6), x(4) - x(7));
      return std::min({d01, d02, d12}) - spec.collision_radius;
    }
  }
  throw std::logic_error("unreachable");
}

// Drift f(x, 0, 0).
inline void drift(const SystemSpec& spec, const VectorXd& x, VectorXd& out) {
  detail::check_state(spec, x);
  out.resize(spec.state_dim);
  switch (spec.kind) {
    case SystemKind::kAir3d:
      out(0) = -spec.v_e + spec.v_p * std::cos(x(2));
      out(1) = spec.v_p * std::sin(x(2));
      out(2) = 0.0;
      return;
    case SystemKind::kVehicles6d:
    case SystemKind::kVehicles9d: {
      const int nv = spec.state_dim / 3;
      for (int v = 0; v < nv; ++v) {
        const double speed = detail::vehicle_speed(spec, v);
        out(3 * v + 0) = speed * std::cos(x(3 * v + 2));
        out(3 * v + 1) = speed * std::sin(x(3 * v + 2));
        out(3 * v + 2) = 0.0;
      }
      return;
    }
  }
  throw std::logic_error("unreachable");
}

// Column of the (input-affine) control matrix for scalar input i, so that
// f(x, inputs) = drift(x) + sum_i inputs[i] * input_field(x, i).
inline void input_field(const SystemSpec& spec, const VectorXd& x, int input,
                        VectorXd& out) {
  detail::check_state(spec, x);
  if (input < 0 || input >= spec.num_inputs())
    throw std::invalid_argument("input index out of range");
  out = VectorXd::Zero(spec.state_dim);
  switch (spec.kind) {
    case SystemKind::kAir3d:
      if (input == 0) {  // omega_e (control)
        out(0) = x(1);
        out(1) = -x(0);
        out(2) = -1.0;
      } else {  // omega_p (disturbance)
        out(2) = 1.0;
      }
      return;
    case SystemKind::kVehicles6d:
    case SystemKind::kVehicles9d:
      out(3 * input + 2) = 1.0;
      return;
  }
  throw std::logic_error("unreachable");
}

// The affine coefficient of input i in <p, f(x, .)>.
inline double input_coefficient(const SystemSpec& spec, const VectorXd& x,
                                const VectorXd& p, int input) {
  switch (spec.kind) {
    case SystemKind::kAir3d:
      return input == 0 ? p(0) * x(1) - p(1) * x(0) - p(2) : p(2);
    case SystemKind::kVehicles6d:
    case SystemKind::kVehicles9d:
      return p(3 * input + 2);
  }
  throw std::logic_error("unreachable");
}

// f(x, u, d) with controls/disturbances supplied separately, matched to the
// scalar inputs in dynamics order. Inputs outside [-omega_max, omega_max]
// are rejected.
inline VectorXd flow(const SystemSpec& spec, const VectorXd& x,
                     const VectorXd& controls, const VectorXd& disturbances) {
  detail::check_state(spec, x);
  if (controls.size() != spec.num_controls() ||
      disturbances.size() != spec.num_disturbances())
    throw std::invalid_argument("input count mismatch");
  const double bound = spec.omega_max * (1.0 + 1e-12) + 1e-12;
  for (Eigen::Index i = 0; i < controls.size(); ++i)
    if (!(std::abs(controls(i)) <= bound))
      throw std::invalid_argument("control input out of bounds");
  for (Eigen::Index i = 0; i < disturbances.size(); ++i)
    if (!(std::abs(disturbances(i)) <= bound))
      throw std::invalid_argument("disturbance input out of bounds");

  VectorXd f;
  drift(spec, x, f);
  VectorXd g;
  int ci = 0, di = 0;
  for (int i = 0; i < spec.num_inputs(); ++i) {
    const double val = spec.roles[i] == InputRole::kControl
                           ? controls(ci++)
                           : disturbances(di++);
    input_field(spec, x, i, g);
    f += val * g;
  }
  return f;
}

// Analytically optimized Hamiltonian. Under kAvoid each control contributes
// +omega_max*|coef| and each disturbance -omega_max*|coef|; kReach flips the
// signs. Air3D expands to
//   p1(-v_e + v_p cos x3) + p2 v_p sin x3
//   + omega_max |p1 x2 - p2 x1 - p3| - omega_max |p3|.
inline double hamiltonian(const SystemSpec& spec, const VectorXd& x,
                          const VectorXd& p) {
  detail::check_state(spec, x);
  detail::check_state(spec, p);
  double h = 0.0;
  switch (spec.kind) {
    case SystemKind::kAir3d:
      h = p(0) * (-spec.v_e + spec.v_p * std::cos(x(2))) +
          p(1) * spec.v_p * std::sin(x(2));
      break;
    case SystemKind::kVehicles6d:
    case SystemKind::kVehicles9d: {
      const int nv = spec.state_dim / 3;
      for (int v = 0; v < nv; ++v) {
        const double speed = detail::vehicle_speed(spec, v);
        h += p(3 * v) * speed * std::cos(x(3 * v + 2)) +
             p(3 * v + 1) * speed * std::sin(x(3 * v + 2));
      }
      break;
    }
  }
  const double sgn = spec.convention == GameConvention::kAvoid ? 1.0 : -1.0;
  for (int i = 0; i < spec.num_inputs(); ++i) {
    const double coef = std::abs(input_coefficient(spec, x, p, i));
    h += (spec.roles[i] == InputRole::kControl ? sgn : -sgn) * spec.omega_max *
         coef;
  }
  return h;
}

namespace detail {

// Bang-bang extremizer of coef*val over [-omega_max, omega_max]; ties
// resolve to +omega_max for determinism.
inline double bang(double coef, double omega_max, bool maximize) {
  if (coef == 0.0) return omega_max;
  if (maximize) return coef > 0.0 ? omega_max : -omega_max;
  return coef > 0.0 ? -omega_max : omega_max;
}

}  // namespace detail

inline void optimal_inputs(const SystemSpec& spec, const VectorXd& x,
                           const VectorXd& p, VectorXd& controls,
                           VectorXd& disturbances) {
  detail::check_state(spec, x);
  detail::check_state(spec, p);
  controls.resize(spec.num_controls());
  disturbances.resize(spec.num_disturbances());
  const bool control_maximizes = spec.convention == GameConvention::kAvoid;
  int ci = 0, di = 0;
  for (int i = 0; i < spec.num_inputs(); ++i) {
    const double coef = input_coefficient(spec, x, p, i);
    if (spec.roles[i] == InputRole::kControl)
      controls(ci++) = detail::bang(coef, spec.omega_max, control_maximizes);
    else
      disturbances(di++) = detail::bang(coef, spec.omega_max, !control_maximizes);
  }
}

inline VectorXd optimal_control(const SystemSpec& spec, const VectorXd& x,
                                const VectorXd& p) {
  VectorXd u, d;
  optimal_inputs(spec, x, p, u, d);
  return u;
}

inline VectorXd optimal_disturbance(const SystemSpec& spec, const VectorXd& x,
                                    const VectorXd& p) {
  VectorXd u, d;
  optimal_inputs(spec, x, p, u, d);
  return d;
}

// f(x, u*, d*) = dH/dp almost everywhere; feeds the residual adjoints.
inline void flow_optimal(const SystemSpec& spec, const VectorXd& x,
                         const VectorXd& p, VectorXd& out) {
  VectorXd u, d;
  optimal_inputs(spec, x, p, u, d);
  out = flow(spec, x, u, d);
}

// Wraps periodic coordinates into [lo, lo + 2*pi); other coordinates pass
// through unchanged.
inline VectorXd wrap_angles(const SystemSpec& spec, VectorXd x) {
  detail::check_state(spec, x);
  for (int d = 0; d < spec.state_dim; ++d) {
    if (!spec.periodic[d]) continue;
    const double lo = spec.lo(d);
    x(d) = x(d) - detail::kTwoPi * std::floor((x(d) - lo) / detail::kTwoPi);
  }
  return x;
}

// Affine map of the state box onto [-1, 1]^n. Periodic coordinates are
// wrapped first; non-periodic coordinates must lie inside the box.
inline VectorXd normalize(const SystemSpec& spec, const VectorXd& x) {
  VectorXd w = wrap_angles(spec, x);
  VectorXd out(spec.state_dim);
  for (int d = 0; d < spec.state_dim; ++d) {
    const double span = spec.hi(d) - spec.lo(d);
    if (!spec.periodic[d]) {
      const double slack = 1e-9 * span;
      if (w(d) < spec.lo(d) - slack || w(d) > spec.hi(d) + slack)
        throw std::invalid_argument("state coordinate " + std::to_string(d) +
                                    " outside the system box");
    }
    out(d) = (w(d) - 0.5 * (spec.lo(d) + spec.hi(d))) / (0.5 * span);
  }
  return out;
}

inline VectorXd denormalize(const SystemSpec& spec, const VectorXd& z) {
  detail::check_state(spec, z);
  VectorXd out(spec.state_dim);
  for (int d = 0; d < spec.state_dim; ++d)
    out(d) = 0.5 * (spec.lo(d) + spec.hi(d)) + z(d) * 0.5 * (spec.hi(d) - spec.lo(d));
  return out;
}

// Normalization for network inputs (tau, state): tau in [0, horizon] plus
// the state box.
inline InputNormalization input_normalization(const SystemSpec& spec) {
  VectorXd lo(spec.state_dim + 1), hi(spec.state_dim + 1);
  lo(0) = 0.0;
  hi(0) = spec.horizon;
  lo.tail(spec.state_dim) = spec.lo;
  hi.tail(spec.state_dim) = spec.hi;
  return InputNormalization::from_box(lo, hi);
}

}  // namespace hjreach
