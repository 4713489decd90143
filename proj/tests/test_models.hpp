#pragma once

#include <functional>
#include <random>

#include "softcoupled/model.hpp"

namespace softcoupled::testing {

inline RobotModel finger_model(double gravity = 9.81) {
  RobotModel m;
  Chain c;
  for (int i = 0; i < 3; ++i) c.links.push_back(LinkGeometry::uniform_rod(1.0, 0.1));
  m.chains.push_back(c);
  m.actuated = {0, 1};
  m.joint_stiffness = VectorXd::Constant(3, 1.5);
  m.joint_damping = VectorXd::Constant(3, 0.5);
  CouplingSpec k;
  k.family = CouplingFamily::Linear;
  k.k = 2.0;
  k.coord_i = 1;
  k.coord_j = 2;
  m.couplings.push_back(k);
  m.gravity = Vector2d(0.0, -gravity);
  return m;
}

inline RobotModel pendulum(double length = 1.0, double mass = 0.1, double k_d = 0.0,
                           double damping = 0.0, double gravity = 9.81) {
  RobotModel m;
  Chain c;
  c.links.push_back(LinkGeometry::uniform_rod(length, mass));
  m.chains.push_back(c);
  m.actuated = {0};
  m.joint_stiffness = VectorXd::Constant(1, k_d);
  m.joint_damping = VectorXd::Constant(1, damping);
  m.gravity = Vector2d(0.0, -gravity);
  return m;
}

/// Two chains of `links` links each, bases apart along y, coordinate 0 actuated.
inline RobotModel two_chains(int links = 2, double base_gap = 0.0) {
  RobotModel m;
  for (int c = 0; c < 2; ++c) {
    Chain ch;
    ch.base_anchor = Vector2d(0.0, -base_gap * c);
    for (int l = 0; l < links; ++l) ch.links.push_back(LinkGeometry::uniform_rod(0.8 - 0.1 * l, 0.1));
    m.chains.push_back(ch);
  }
  const int n = 2 * links;
  m.actuated = {0};
  m.joint_stiffness = VectorXd::Constant(n, 0.7);
  m.joint_damping = VectorXd::Constant(n, 0.2);
  return m;
}

inline VectorXd random_vector(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  VectorXd v(n);
  for (int i = 0; i < n; ++i) v[i] = u(rng);
  return v;
}

/// Central-difference gradient of a scalar function.
inline VectorXd fd_gradient(const std::function<double(const VectorXd&)>& f, const VectorXd& x,
                            double h = 1e-6) {
  VectorXd g(x.size());
  for (int i = 0; i < x.size(); ++i) {
    VectorXd p = x, m = x;
    p[i] += h;
    m[i] -= h;
    g[i] = (f(p) - f(m)) / (2 * h);
  }
  return g;
}

/// Central-difference Jacobian of a vector function; column i is d f / d x_i.
inline MatrixXd fd_jacobian(const std::function<VectorXd(const VectorXd&)>& f, const VectorXd& x,
                            double h = 1e-6) {
  const VectorXd f0 = f(x);
  MatrixXd J(f0.size(), x.size());
  for (int i = 0; i < x.size(); ++i) {
    VectorXd p = x, m = x;
    p[i] += h;
    m[i] -= h;
    J.col(i) = (f(p) - f(m)) / (2 * h);
  }
  return J;
}

/// Relative error with an absolute floor for quantities near zero.
inline double rel_error(const MatrixXd& got, const MatrixXd& want, double floor = 1e-3) {
  return (got - want).norm() / std::max(want.norm(), floor);
}

}  // namespace softcoupled::testing
