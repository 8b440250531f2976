#pragma once

#include <Eigen/Core>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjreach/activation.hpp"
#include "hjreach/fast_trig.hpp"
#include "hjreach/rng.hpp"

namespace hjreach {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Componentwise affine map taking raw inputs into [-1, 1].
struct InputNormalization {
  VectorXd offset;
  VectorXd scale;  // entries > 0

  static InputNormalization identity(int dim) {
    InputNormalization n;
    n.offset = VectorXd::Zero(dim);
    n.scale = VectorXd::Ones(dim);
    return n;
  }

  // Maps the box [lo, hi] onto [-1, 1] per coordinate.
  static InputNormalization from_box(const VectorXd& lo, const VectorXd& hi) {
    InputNormalization n;
    n.offset = 0.5 * (lo + hi);
    n.scale = 0.5 * (hi - lo);
    if ((n.scale.array() <= 0.0).any())
      throw std::invalid_argument("normalization box has empty extent");
    return n;
  }

  VectorXd normalize(const VectorXd& raw) const {
    return (raw - offset).cwiseQuotient(scale);
  }
};

struct Layer {
  MatrixXd weight;  // out x in
  VectorXd bias;    // out
};

// Fully connected value network V(tau, x) with a per-layer sine / rectifier
// / affine schedule. Sine at layer 0 runs at frequency omega0; deeper sine
// layers run at frequency 1 and carry the 1/omega0 weight-initialization
// scaling instead.
struct ValueNet {
  ActivationSchedule schedule;
  int input_dim = 0;
  int hidden_width = 0;
  double omega0 = 30.0;
  std::vector<Layer> layers;
  InputNormalization norm;

  double layer_frequency(std::size_t l) const {
    if (schedule[l] != Activation::kSine) return 1.0;
    return l == 0 ? omega0 : 1.0;
  }

  std::size_t num_layers() const { return layers.size(); }

  long parameter_count() const {
    long n = 0;
    for (const Layer& lay : layers) n += lay.weight.size() + lay.bias.size();
    return n;
  }
};

// Gradient (or moment) storage shaped like a net's parameters.
struct ParamGrads {
  std::vector<Layer> layers;

  static ParamGrads zeros_like(const ValueNet& net) {
    ParamGrads g;
    g.layers.reserve(net.layers.size());
    for (const Layer& lay : net.layers)
      g.layers.push_back({MatrixXd::Zero(lay.weight.rows(), lay.weight.cols()),
                          VectorXd::Zero(lay.bias.size())});
    return g;
  }
};

namespace detail {

inline void check_schedule_for_net(const ActivationSchedule& sched) {
  if (sched.size() < 1)
    throw std::invalid_argument("schedule is empty");
  if (sched.layers.back() != Activation::kAffine)
    throw std::invalid_argument("schedule must end with an affine layer");
  for (std::size_t i = 0; i + 1 < sched.size(); ++i)
    if (sched[i] == Activation::kAffine)
      throw std::invalid_argument("affine tag allowed only in final position");
}

// act = phi(h), d1 = phi'(h), elementwise; for sine layers both come from a
// single fused sin/cos pass
inline void activation_and_derivative(Activation a, double freq,
                                      const MatrixXd& h, MatrixXd& act,
                                      MatrixXd& d1) {
  const Eigen::Index n = h.size();
  switch (a) {
    case Activation::kSine: {
      act.resize(h.rows(), h.cols());
      d1.resize(h.rows(), h.cols());
      fast_sincos_array(h.data(), freq, act.data(), d1.data(),
                        static_cast<std::size_t>(n));
      if (freq != 1.0) d1 *= freq;
      return;
    }
    case Activation::kRectifier:
      act = h.cwiseMax(0.0);
      d1 = (h.array() > 0.0).cast<double>().matrix();  // subgradient 0 at 0
      return;
    case Activation::kAffine:
      act = h;
      d1.resize(0, 0);  // implicit ones; sweeps skip the product
      return;
  }
  throw std::logic_error("unreachable");
}

inline void check_input(const ValueNet& net, const VectorXd& raw) {
  if (raw.size() != net.input_dim)
    throw std::invalid_argument("input dimension " + std::to_string(raw.size()) +
                                " != network input_dim " +
                                std::to_string(net.input_dim));
  if (!raw.allFinite())
    throw std::invalid_argument("non-finite network input");
}

}  // namespace detail

// Deterministic initialization. Sine layer 0: U(+-1/fan_in); deeper sine
// layers: U(+-sqrt(6/fan_in)/omega0). Rectifier: U(+-sqrt(6/fan_in)).
// Affine: U(+-1/sqrt(fan_in)). Biases: U(+-1/sqrt(fan_in)). Draw order is
// fixed (per layer: weights row-major, then bias).
inline ValueNet init_network(const ActivationSchedule& schedule, int input_dim,
                             int hidden_width, double omega0, std::uint64_t seed,
                             InputNormalization norm = {}) {
  detail::check_schedule_for_net(schedule);
  if (input_dim < 2)
    throw std::invalid_argument("input_dim must be >= 2 (tau plus state)");
  if (hidden_width < 1) throw std::invalid_argument("hidden_width must be >= 1");
  if (omega0 <= 0.0) throw std::invalid_argument("omega0 must be positive");

  ValueNet net;
  net.schedule = schedule;
  net.input_dim = input_dim;
  net.hidden_width = hidden_width;
  net.omega0 = omega0;
  if (norm.offset.size() == 0)
    norm = InputNormalization::identity(input_dim);
  if (norm.offset.size() != input_dim || norm.scale.size() != input_dim)
    throw std::invalid_argument("normalization dimension mismatch");
  net.norm = std::move(norm);

  std::mt19937_64 gen(seed);
  const std::size_t L = schedule.size();
  net.layers.resize(L);
  for (std::size_t l = 0; l < L; ++l) {
    const int fan_in = (l == 0) ? input_dim : hidden_width;
    const int fan_out = (l + 1 == L) ? 1 : hidden_width;
    double wr;
    switch (schedule[l]) {
      case Activation::kSine:
        wr = (l == 0) ? 1.0 / fan_in : std::sqrt(6.0 / fan_in) / omega0;
        break;
      case Activation::kRectifier:
        wr = std::sqrt(6.0 / fan_in);
        break;
      case Activation::kAffine:
        wr = 1.0 / std::sqrt(static_cast<double>(fan_in));
        break;
      default:
        throw std::logic_error("unreachable");
    }
    const double br = 1.0 / std::sqrt(static_cast<double>(fan_in));
    Layer& lay = net.layers[l];
    lay.weight.resize(fan_out, fan_in);
    for (int r = 0; r < fan_out; ++r)
      for (int c = 0; c < fan_in; ++c) lay.weight(r, c) = uniform(gen, -wr, wr);
    lay.bias.resize(fan_out);
    for (int r = 0; r < fan_out; ++r) lay.bias(r) = uniform(gen, -br, br);
  }
  return net;
}

// Normalized input plus per-layer pre-activations and activations; replaying
// act.back() reproduces the forward output exactly.
struct ForwardTrace {
  VectorXd z0;
  std::vector<VectorXd> pre;
  std::vector<VectorXd> act;
};

inline double forward(const ValueNet& net, const VectorXd& raw,
                      ForwardTrace* trace = nullptr) {
  detail::check_input(net, raw);
  VectorXd z = net.norm.normalize(raw);
  if (trace) {
    trace->z0 = z;
    trace->pre.clear();
    trace->act.clear();
  }
  MatrixXd act, d1;
  for (std::size_t l = 0; l < net.num_layers(); ++l) {
    VectorXd h = net.layers[l].weight * z + net.layers[l].bias;
    detail::activation_and_derivative(net.schedule[l], net.layer_frequency(l),
                                      h, act, d1);
    z = act.col(0);
    if (trace) {
      trace->pre.push_back(std::move(h));
      trace->act.push_back(z);
    }
  }
  return z(0);
}

// dV/draw (raw, unnormalized coordinates), length input_dim; component 0 is
// dV/dtau and the tail is the spatial gradient.
inline VectorXd input_gradient(const ValueNet& net, const VectorXd& raw) {
  detail::check_input(net, raw);
  const std::size_t L = net.num_layers();
  VectorXd z = net.norm.normalize(raw);
  std::vector<MatrixXd> d1(L);
  MatrixXd act;
  for (std::size_t l = 0; l < L; ++l) {
    const VectorXd h = net.layers[l].weight * z + net.layers[l].bias;
    detail::activation_and_derivative(net.schedule[l], net.layer_frequency(l),
                                      h, act, d1[l]);
    z = act.col(0);
  }
  VectorXd a = VectorXd::Ones(1);
  for (std::size_t li = L; li-- > 0;) {
    if (d1[li].size())
      a = net.layers[li].weight.transpose() * d1[li].col(0).cwiseProduct(a).eval();
    else
      a = net.layers[li].weight.transpose() * a;
  }
  return a.cwiseQuotient(net.norm.scale);
}

struct ValueAndGradient {
  double value = 0.0;
  VectorXd gradient;  // d value / d raw
};

inline ValueAndGradient evaluate(const ValueNet& net, const VectorXd& raw) {
  ValueAndGradient out;
  out.gradient = input_gradient(net, raw);
  out.value = forward(net, raw);
  return out;
}

// ---- batched operations (samples are columns) ----

struct BatchTrace {
  MatrixXd z0;                // input_dim x B, normalized
  std::vector<MatrixXd> pre;  // per layer
  std::vector<MatrixXd> act;
  std::vector<MatrixXd> d1;   // phi'(pre); 0x0 for affine layers
};

struct BatchEval {
  VectorXd values;          // B
  MatrixXd input_gradients; // input_dim x B, raw coordinates
};

inline BatchEval batch_evaluate(const ValueNet& net, const MatrixXd& raw,
                                BatchTrace* keep = nullptr,
                                bool with_gradients = true) {
  if (raw.rows() != net.input_dim)
    throw std::invalid_argument("batch input dimension mismatch");
  if (!raw.allFinite())
    throw std::invalid_argument("non-finite batch input");
  const Eigen::Index B = raw.cols();
  const std::size_t L = net.num_layers();

  BatchTrace local;
  BatchTrace& tr = keep ? *keep : local;
  tr.pre.assign(L, MatrixXd());
  tr.act.assign(L, MatrixXd());
  tr.d1.assign(L, MatrixXd());
  tr.z0 = raw;
  tr.z0.colwise() -= net.norm.offset;
  tr.z0.array().colwise() /= net.norm.scale.array();

  const MatrixXd* z = &tr.z0;
  for (std::size_t l = 0; l < L; ++l) {
    tr.pre[l] = (net.layers[l].weight * (*z)).colwise() + net.layers[l].bias;
    detail::activation_and_derivative(net.schedule[l], net.layer_frequency(l),
                                      tr.pre[l], tr.act[l], tr.d1[l]);
    z = &tr.act[l];
  }

  BatchEval ev;
  ev.values = tr.act[L - 1].row(0).transpose();
  if (with_gradients) {
    // reverse sweep for dV/dz0, all samples at once
    MatrixXd a = MatrixXd::Ones(1, B);
    for (std::size_t li = L; li-- > 0;) {
      if (tr.d1[li].size())
        a = net.layers[li].weight.transpose() * tr.d1[li].cwiseProduct(a).eval();
      else
        a = net.layers[li].weight.transpose() * a;
    }
    a.array().colwise() /= net.norm.scale.array();
    ev.input_gradients = std::move(a);
  }
  return ev;
}

// Per-sample adjoints of a scalar loss: d loss / d value, and (optionally)
// d loss / d input-gradient-component in raw coordinates. An empty
// input_grad (0x0) means the loss does not touch input gradients.
struct LossAdjoints {
  VectorXd value;      // B
  MatrixXd input_grad; // input_dim x B, or 0x0
};

// Exact parameter gradient of
//   F = sum_i [ adj.value(i) * V_i + <adj.input_grad.col(i), dV_i/draw> ].
// The input-gradient adjoints are handled by differentiating a
// forward-tangent pass (directional derivative along the adjoint direction),
// which yields the mixed d^2 V / dtheta dinput terms in closed form. For
// sine layers phi'' = -freq^2 * phi, so no extra transcendental pass is
// needed.
inline ParamGrads parameter_gradients_from_trace(const ValueNet& net,
                                                 const BatchTrace& tr,
                                                 const LossAdjoints& adj) {
  const std::size_t L = net.num_layers();
  const Eigen::Index B = tr.z0.cols();
  if (adj.value.size() != B)
    throw std::invalid_argument("value adjoint length mismatch");
  const bool with_tangent = adj.input_grad.size() != 0;
  if (with_tangent &&
      (adj.input_grad.rows() != net.input_dim || adj.input_grad.cols() != B))
    throw std::invalid_argument("input-gradient adjoint shape mismatch");

  ParamGrads grads = ParamGrads::zeros_like(net);

  // Forward tangent pass: t0 is the adjoint direction mapped into
  // normalized coordinates (the 1/scale chain factor).
  std::vector<MatrixXd> tang_pre(L), tang_act(L);
  MatrixXd t0;
  if (with_tangent) {
    t0 = adj.input_grad;
    t0.array().colwise() /= net.norm.scale.array();
    const MatrixXd* t = &t0;
    for (std::size_t l = 0; l < L; ++l) {
      tang_pre[l] = net.layers[l].weight * (*t);
      tang_act[l] =
          tr.d1[l].size() ? tr.d1[l].cwiseProduct(tang_pre[l]) : tang_pre[l];
      t = &tang_act[l];
    }
  }

  // Reverse pass over the coupled (value, tangent) recurrences.
  MatrixXd zbar = MatrixXd::Zero(1, B);
  zbar.row(0) = adj.value.transpose();
  MatrixXd tbar;
  if (with_tangent) tbar = MatrixXd::Ones(1, B);

  for (std::size_t li = L; li-- > 0;) {
    const Activation a = net.schedule[li];
    const double freq = net.layer_frequency(li);
    const MatrixXd& zprev = (li == 0) ? tr.z0 : tr.act[li - 1];

    MatrixXd hbar =
        tr.d1[li].size() ? tr.d1[li].cwiseProduct(zbar).eval() : zbar;
    MatrixXd sbar;
    if (with_tangent) {
      if (a == Activation::kSine) {
        // phi'' = -freq^2 * phi: reuse the stored activations
        hbar.array() -= (freq * freq) * tr.act[li].array() *
                        tang_pre[li].array() * tbar.array();
      }
      sbar = tr.d1[li].size() ? tr.d1[li].cwiseProduct(tbar) : tbar;
    }

    grads.layers[li].weight.noalias() = hbar * zprev.transpose();
    grads.layers[li].bias = hbar.rowwise().sum();
    if (with_tangent) {
      const MatrixXd& tprev = (li == 0) ? t0 : tang_act[li - 1];
      grads.layers[li].weight.noalias() += sbar * tprev.transpose();
    }

    if (li > 0) {
      zbar = net.layers[li].weight.transpose() * hbar;
      if (with_tangent) tbar = net.layers[li].weight.transpose() * sbar;
    }
  }
  return grads;
}

inline ParamGrads parameter_gradients(const ValueNet& net, const MatrixXd& raw,
                                      const LossAdjoints& adj) {
  if (raw.cols() == 0) throw std::invalid_argument("empty batch");
  BatchTrace tr;
  batch_evaluate(net, raw, &tr);
  return parameter_gradients_from_trace(net, tr, adj);
}

}  // namespace hjreach
