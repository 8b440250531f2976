#include <catch2/catch_amalgamated.hpp>

#include "hjreach/adam.hpp"

using namespace hjreach;

namespace {
ValueNet tiny_net(std::uint64_t seed) {
  return init_network(parse_structure("sl"), 2, 4, 30.0, seed);
}
}  // namespace

TEST_CASE("zero gradient with zero moments leaves parameters unchanged") {
  ValueNet net = tiny_net(0);
  const ValueNet before = net;
  AdamState st = init_adam(net);
  adam_step(st, net, ParamGrads::zeros_like(net));
  REQUIRE(st.step == 1);
  for (std::size_t l = 0; l < net.layers.size(); ++l) {
    REQUIRE(net.layers[l].weight == before.layers[l].weight);
    REQUIRE(net.layers[l].bias == before.layers[l].bias);
  }
}

TEST_CASE("first step moves by -lr * sign(g), independent of |g|") {
  ValueNet net = tiny_net(1);
  const ValueNet before = net;
  AdamState st = init_adam(net, {.learning_rate = 1e-3});
  ParamGrads g = ParamGrads::zeros_like(net);
  g.layers[0].weight(0, 0) = 7.25;
  g.layers[0].weight(1, 1) = -1e-4;
  adam_step(st, net, g);
  const double d00 = net.layers[0].weight(0, 0) - before.layers[0].weight(0, 0);
  const double d11 = net.layers[0].weight(1, 1) - before.layers[0].weight(1, 1);
  REQUIRE(d00 == Catch::Approx(-1e-3).epsilon(1e-3));
  REQUIRE(d11 == Catch::Approx(+1e-3).epsilon(1e-3));
  // untouched parameter stays put
  REQUIRE(net.layers[1].weight == before.layers[1].weight);
}

TEST_CASE("identical gradient histories give identical updates") {
  ValueNet net = tiny_net(2);
  AdamState st = init_adam(net);
  for (int it = 0; it < 5; ++it) {
    ParamGrads g = ParamGrads::zeros_like(net);
    const double val = 0.3 * (it + 1) * (it % 2 ? -1 : 1);
    g.layers[0].weight(0, 0) = val;
    g.layers[0].weight(2, 1) = val;
    g.layers[1].bias(0) = val;
    adam_step(st, net, g);
  }
  const double a = net.layers[0].weight(0, 0) - tiny_net(2).layers[0].weight(0, 0);
  const double b = net.layers[0].weight(2, 1) - tiny_net(2).layers[0].weight(2, 1);
  const double c = net.layers[1].bias(0) - tiny_net(2).layers[1].bias(0);
  REQUIRE(a == b);
  REQUIRE(a == c);
}

TEST_CASE("shape mismatch is rejected") {
  ValueNet net = tiny_net(3);
  AdamState st = init_adam(net);
  ParamGrads g = ParamGrads::zeros_like(net);
  g.layers[0].weight.resize(2, 2);
  REQUIRE_THROWS_AS(adam_step(st, net, g), std::invalid_argument);
}
