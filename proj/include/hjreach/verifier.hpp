#pragma once

#include <chrono>
#include <cmath>
#include <limits>
#include <string>
#include <vector>

#include "hjreach/dynamics.hpp"
#include "hjreach/rng.hpp"
#include "hjreach/value_model.hpp"

namespace hjreach {

struct RolloutResult {
  VectorXd initial_state;
  double initial_value = 0.0;  // V(x0, tau = T_f), the full-horizon value
  double min_boundary = 0.0;   // J: min of l along the trajectory
  bool hit_target = false;     // J <= 0
  int steps = 0;
  bool clamped = false;  // trajectory touched the box and was clamped
};

// Plays the value-induced policy against the worst-case disturbance from x0
// with explicit Euler steps of size dt, querying the model at the remaining
// time-to-go. Exits early once the target is reached (J can only be
// certified <= 0). Positions leaving the box are clamped to the boundary.
inline RolloutResult rollout(const ValueModel& model, const SystemSpec& spec,
                             const VectorXd& x0, double dt) {
  if (dt <= 0.0) throw std::invalid_argument("rollout dt must be positive");
  detail::check_state(spec, x0);

  RolloutResult res;
  res.initial_state = x0;
  VectorXd x = wrap_angles(spec, x0);
  res.initial_value = model.value(x, spec.horizon);
  res.min_boundary = boundary_value(spec, x);
  if (res.min_boundary <= 0.0) {
    res.hit_target = true;
    return res;
  }

  VectorXd u, d, p;
  double remaining = spec.horizon;
  while (remaining > 1e-12) {
    const double h = std::min(dt, remaining);
    p = model.spatial_gradient(x, remaining);
    optimal_inputs(spec, x, p, u, d);
    x += h * flow(spec, x, u, d);
    x = wrap_angles(spec, x);
    for (int dim = 0; dim < spec.state_dim; ++dim) {
      if (spec.periodic[dim]) continue;
      if (x(dim) < spec.lo(dim)) {
        x(dim) = spec.lo(dim);
        res.clamped = true;
      } else if (x(dim) > spec.hi(dim)) {
        x(dim) = spec.hi(dim);
        res.clamped = true;
      }
    }
    remaining -= h;
    res.steps += 1;
    res.min_boundary = std::min(res.min_boundary, boundary_value(spec, x));
    if (res.min_boundary <= 0.0) {
      res.hit_target = true;
      break;
    }
  }
  return res;
}

struct VerificationReport {
  std::string model_label;
  long n_samples = 0;
  std::uint64_t seed = 0;
  long condition1_count = 0;  // outside the learned BRT but reaches the target
  long condition2_count = 0;  // inside the learned BRT but never reaches it
  double violation_rate = 0.0;
  double delta_level = -std::numeric_limits<double>::infinity();
  double runtime_s = 0.0;
};

// Maximum learned full-horizon value over the empirically unsafe rollouts;
// -inf when no rollout reached the target.
inline double delta_level(const std::vector<RolloutResult>& rollouts) {
  double delta = -std::numeric_limits<double>::infinity();
  for (const RolloutResult& r : rollouts)
    if (r.hit_target) delta = std::max(delta, r.initial_value);
  return delta;
}

// Samples initial states uniformly over the state box, rolls each out under
// the induced policy, and classifies the two violation conditions against
// the learned membership V(x0, T_f) <= 0. Deterministic for a fixed seed:
// rollouts are independent and reduced in sample order.
inline VerificationReport violation_rate(
    const ValueModel& model, const SystemSpec& spec, long n_samples,
    std::uint64_t seed, double dt,
    std::vector<RolloutResult>* keep_rollouts = nullptr) {
  if (n_samples < 1) throw std::invalid_argument("need at least one sample");
  const auto t0 = std::chrono::steady_clock::now();

  std::mt19937_64 gen(seed);
  MatrixXd starts(spec.state_dim, n_samples);
  for (long i = 0; i < n_samples; ++i)
    for (int d = 0; d < spec.state_dim; ++d)
      starts(d, i) = uniform(gen, spec.lo(d), spec.hi(d));

  std::vector<RolloutResult> rollouts(n_samples);
#pragma omp parallel for schedule(dynamic, 64)
  for (long i = 0; i < n_samples; ++i)
    rollouts[i] = rollout(model, spec, starts.col(i), dt);

  VerificationReport rep;
  rep.model_label = model.label();
  rep.n_samples = n_samples;
  rep.seed = seed;
  for (const RolloutResult& r : rollouts) {
    const bool in_brt = r.initial_value <= 0.0;
    if (!in_brt && r.hit_target) rep.condition1_count += 1;
    if (in_brt && !r.hit_target) rep.condition2_count += 1;
  }
  rep.violation_rate =
      static_cast<double>(rep.condition1_count + rep.condition2_count) /
      static_cast<double>(n_samples);
  rep.delta_level = delta_level(rollouts);
  rep.runtime_s =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  if (keep_rollouts) *keep_rollouts = std::move(rollouts);
  return rep;
}

inline std::string report_csv_header() {
  return "structure,seed,n,violation_rate,cond1,cond2,delta,runtime_s";
}

inline std::string report_csv_row(const VerificationReport& rep) {
  char buf[256];
  std::snprintf(buf, sizeof buf, "%s,%llu,%ld,%.6f,%ld,%ld,%.17g,%.3f",
                rep.model_label.c_str(),
                static_cast<unsigned long long>(rep.seed), rep.n_samples,
                rep.violation_rate, rep.condition1_count, rep.condition2_count,
                rep.delta_level, rep.runtime_s);
  return buf;
}

// Human-readable summary, one line per field.
inline std::string report_summary(const VerificationReport& rep) {
  char buf[512];
  std::snprintf(
      buf, sizeof buf,
      "model           %s\n"
      "samples         %ld (seed %llu)\n"
      "violation rate  %.4f  (condition 1: %ld, condition 2: %ld)\n"
      "delta level     %.6g\n"
      "runtime         %.2f s\n",
      rep.model_label.c_str(), rep.n_samples,
      static_cast<unsigned long long>(rep.seed), rep.violation_rate,
      rep.condition1_count, rep.condition2_count, rep.delta_level,
      rep.runtime_s);
  return buf;
}

}  // namespace hjreach
