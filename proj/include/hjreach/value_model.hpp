#pragma once

#include <cmath>
#include <memory>
#include <string>

#include "hjreach/dynamics.hpp"
#include "hjreach/grid_oracle.hpp"
#include "hjreach/net.hpp"

namespace hjreach {

// Uniform query contract over learned and grid-sampled value functions:
// V(x, tau) and its spatial gradient. Implementations must be safe for
// concurrent read-only use.
class ValueModel {
 public:
  virtual ~ValueModel() = default;
  virtual int state_dim() const = 0;
  virtual std::string label() const = 0;
  virtual double value(const VectorXd& x, double tau) const = 0;
  virtual VectorXd spatial_gradient(const VectorXd& x, double tau) const = 0;
};

class NetModel : public ValueModel {
 public:
  NetModel(ValueNet net, std::string label)
      : net_(std::move(net)), label_(std::move(label)) {}

  int state_dim() const override { return net_.input_dim - 1; }
  std::string label() const override { return label_; }

  double value(const VectorXd& x, double tau) const override {
    return forward(net_, assemble(x, tau));
  }

  VectorXd spatial_gradient(const VectorXd& x, double tau) const override {
    return input_gradient(net_, assemble(x, tau)).tail(net_.input_dim - 1);
  }

  const ValueNet& net() const { return net_; }

 private:
  VectorXd assemble(const VectorXd& x, double tau) const {
    if (x.size() + 1 != net_.input_dim)
      throw std::invalid_argument("state dimension mismatch");
    VectorXd raw(net_.input_dim);
    raw(0) = tau;
    raw.tail(x.size()) = x;
    return raw;
  }

  ValueNet net_;
  std::string label_;
};

class GridModel : public ValueModel {
 public:
  explicit GridModel(ValueGrid grid, std::string label = "grid")
      : grid_(std::move(grid)), label_(std::move(label)) {}

  int state_dim() const override { return 3; }
  std::string label() const override { return label_; }

  double value(const VectorXd& x, double tau) const override {
    return grid_interpolate(grid_, wrap_angles(grid_.system, x), tau).value;
  }

  VectorXd spatial_gradient(const VectorXd& x, double tau) const override {
    return grid_interpolate(grid_, wrap_angles(grid_.system, x), tau).gradient;
  }

  const ValueGrid& grid() const { return grid_; }

 private:
  ValueGrid grid_;
  std::string label_;
};

// Views a pair of vehicles of a joint multi-vehicle state through the air3d
// relative value grid: the second vehicle of the pair is the evader frame.
// Outside the grid box the pair is too far apart to matter and the boundary
// function itself is returned.
class RelativePairModel : public ValueModel {
 public:
  explicit RelativePairModel(std::shared_ptr<const ValueGrid> grid,
                             std::string label = "air3d-relative")
      : grid_(std::move(grid)), label_(std::move(label)) {
    if (grid_->system.kind != SystemKind::kAir3d)
      throw std::invalid_argument("relative pair model needs an air3d grid");
  }

  int state_dim() const override { return 6; }
  std::string label() const override { return label_; }

  double value(const VectorXd& x, double tau) const override {
    const VectorXd rel = relative_state(x);
    if (!inside(rel))
      return std::hypot(rel(0), rel(1)) - grid_->system.collision_radius;
    return grid_interpolate(*grid_, rel, tau).value;
  }

  VectorXd spatial_gradient(const VectorXd& x, double tau) const override {
    const VectorXd rel = relative_state(x);
    Eigen::Vector3d g3;
    if (!inside(rel)) {
      const double d = std::hypot(rel(0), rel(1));
      g3 = d > 0 ? Eigen::Vector3d(rel(0) / d, rel(1) / d, 0.0)
                 : Eigen::Vector3d::Zero();
    } else {
      g3 = grid_interpolate(*grid_, rel, tau).gradient;
    }
    // chain rule through the rigid-frame reduction
    const double ct = std::cos(x(5)), st = std::sin(x(5));
    VectorXd g(6);
    g(0) = ct * g3(0) - st * g3(1);
    g(1) = st * g3(0) + ct * g3(1);
    g(2) = g3(2);
    g(3) = -g(0);
    g(4) = -g(1);
    g(5) = rel(1) * g3(0) - rel(0) * g3(1) - g3(2);
    return g;
  }

 private:
  // pair state (x_p, y_p, th_p, x_e, y_e, th_e) -> evader-frame relative state
  VectorXd relative_state(const VectorXd& x) const {
    if (x.size() != 6) throw std::invalid_argument("pair state must be 6-D");
    const double dx = x(0) - x(3), dy = x(1) - x(4);
    const double ct = std::cos(x(5)), st = std::sin(x(5));
    VectorXd rel(3);
    rel(0) = ct * dx + st * dy;
    rel(1) = -st * dx + ct * dy;
    rel(2) = x(2) - x(5);
    return wrap_angles(grid_->system, rel);
  }

  bool inside(const VectorXd& rel) const {
    return rel(0) >= grid_->lo(0) && rel(0) <= grid_->hi(0) &&
           rel(1) >= grid_->lo(1) && rel(1) <= grid_->hi(1);
  }

  std::shared_ptr<const ValueGrid> grid_;
  std::string label_;
};

// Pointwise minimum over the three vehicle pairs of a 9-D state, each pair
// queried through a 6-D value model (the first vehicle of the pair fills the
// pursuer slot). The union of the pairwise sub-zero sets is the sub-zero set
// of this model.
class PairUnionModel : public ValueModel {
 public:
  PairUnionModel(std::shared_ptr<const ValueModel> pair_model,
                 std::string label = "pairwise-union")
      : pair_(std::move(pair_model)), label_(std::move(label)) {
    if (pair_->state_dim() != 6)
      throw std::invalid_argument("pair union needs a 6-D pair model");
  }

  int state_dim() const override { return 9; }
  std::string label() const override { return label_; }

  double value(const VectorXd& x, double tau) const override {
    double best;
    min_pair(x, tau, &best);
    return best;
  }

  VectorXd spatial_gradient(const VectorXd& x, double tau) const override {
    double best;
    const int pair = min_pair(x, tau, &best);
    const auto [a, b] = kPairs[pair];
    const VectorXd g6 = pair_->spatial_gradient(sub_state(x, a, b), tau);
    VectorXd g = VectorXd::Zero(9);
    g.segment(3 * a, 3) = g6.head(3);
    g.segment(3 * b, 3) = g6.tail(3);
    return g;
  }

 private:
  static constexpr std::array<std::pair<int, int>, 3> kPairs = {
      {{0, 1}, {0, 2}, {1, 2}}};

  static VectorXd sub_state(const VectorXd& x, int a, int b) {
    VectorXd s(6);
    s.head(3) = x.segment(3 * a, 3);
    s.tail(3) = x.segment(3 * b, 3);
    return s;
  }

  int min_pair(const VectorXd& x, double tau, double* best) const {
    if (x.size() != 9) throw std::invalid_argument("union state must be 9-D");
    *best = std::numeric_limits<double>::infinity();
    int arg = 0;
    for (int i = 0; i < 3; ++i) {
      const auto [a, b] = kPairs[i];
      const double v = pair_->value(sub_state(x, a, b), tau);
      if (v < *best) {
        *best = v;
        arg = i;
      }
    }
    return arg;
  }

  std::shared_ptr<const ValueModel> pair_;
  std::string label_;
};

// Constant value; handy for degenerate-case tests and diagnostics.
class ConstantModel : public ValueModel {
 public:
  ConstantModel(int dim, double value) : dim_(dim), value_(value) {}
  int state_dim() const override { return dim_; }
  std::string label() const override { return "constant"; }
  double value(const VectorXd&, double) const override { return value_; }
  VectorXd spatial_gradient(const VectorXd&, double) const override {
    return VectorXd::Zero(dim_);
  }

 private:
  int dim_;
  double value_;
};

}  // namespace hjreach
