#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>

#include "hjreach/net.hpp"

namespace hjreach {

struct AdamConfig {
  double learning_rate = 1e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

struct AdamState {
  AdamConfig config;
  std::int64_t step = 0;
  ParamGrads m;  // first moments, shaped like the parameters
  ParamGrads v;  // second moments
};

inline AdamState init_adam(const ValueNet& net, const AdamConfig& config = {}) {
  AdamState st;
  st.config = config;
  st.m = ParamGrads::zeros_like(net);
  st.v = ParamGrads::zeros_like(net);
  return st;
}

// One bias-corrected Adam update, applied in place.
inline void adam_step(AdamState& st, ValueNet& net, const ParamGrads& grads) {
  if (grads.layers.size() != net.layers.size())
    throw std::invalid_argument("gradient/parameter layer count mismatch");
  const AdamConfig& c = st.config;
  st.step += 1;
  const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(st.step));
  const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(st.step));
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    const MatrixXd& gw = grads.layers[l].weight;
    const VectorXd& gb = grads.layers[l].bias;
    if (gw.rows() != net.layers[l].weight.rows() ||
        gw.cols() != net.layers[l].weight.cols() ||
        gb.size() != net.layers[l].bias.size())
      throw std::invalid_argument("gradient shape mismatch at layer " +
                                  std::to_string(l));
    auto update = [&](auto& m, auto& v, const auto& g, auto& p) {
      m = c.beta1 * m + (1.0 - c.beta1) * g;
      v.array() = c.beta2 * v.array() + (1.0 - c.beta2) * g.array().square();
      p.array() -= c.learning_rate * (m.array() / bc1) /
                   ((v.array() / bc2).sqrt() + c.epsilon);
    };
    update(st.m.layers[l].weight, st.v.layers[l].weight, gw, net.layers[l].weight);
    update(st.m.layers[l].bias, st.v.layers[l].bias, gb, net.layers[l].bias);
  }
}

}  // namespace hjreach
