#include "softcoupled/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "softcoupled/coupling.hpp"
#include "softcoupled/errors.hpp"
#include "softcoupled/kinematics.hpp"

namespace softcoupled {
namespace {

constexpr double kMaxCondition = 1e12;

template <typename F>
void for_each_link(const RobotModel& model, F&& f) {
  for (int c = 0; c < static_cast<int>(model.chains.size()); ++c)
    for (int l = 0; l < static_cast<int>(model.chains[c].links.size()); ++l)
      f(c, l, model.chains[c].links[l]);
}

double com_fraction(const LinkGeometry& g) { return g.com_offset / g.length; }

Eigen::LLT<MatrixXd> factor_mass(const MatrixXd& M) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(M, Eigen::EigenvaluesOnly);
  const double lo = eig.eigenvalues().minCoeff();
  const double hi = eig.eigenvalues().maxCoeff();
  if (!(lo > 0.0) || hi / lo > kMaxCondition)
    throw Error(ErrorKind::IllConditioned,
                "inertia matrix is numerically singular (condition number > 1e12)");
  return Eigen::LLT<MatrixXd>(M);
}

VectorXd bias_force(const RobotModel& model, const State& s) {
  return coriolis_matrix(model, s.q, s.q_dot) * s.q_dot +
         gravity_vector(model, s.q) + elastic_force(model, s.q) +
         model.joint_damping.cwiseProduct(s.q_dot);
}

}  // namespace

MatrixXd mass_matrix(const RobotModel& model, const VectorXd& q) {
  const int n = model.dof();
  MatrixXd M = MatrixXd::Zero(n, n);
  for_each_link(model, [&](int c, int l, const LinkGeometry& g) {
    const MatrixXd Jv = point_jacobian(model, q, c, l, com_fraction(g));
    const Eigen::RowVectorXd Jw = angular_jacobian(model, c, l);
    M.noalias() += g.mass * Jv.transpose() * Jv;
    M.noalias() += g.inertia_about_com * Jw.transpose() * Jw;
  });
  return M;
}

std::vector<MatrixXd> mass_matrix_partials(const RobotModel& model,
                                           const VectorXd& q) {
  const int n = model.dof();
  std::vector<MatrixXd> dM(n, MatrixXd::Zero(n, n));
  for_each_link(model, [&](int c, int l, const LinkGeometry& g) {
    const double s = com_fraction(g);
    const MatrixXd Jv = point_jacobian(model, q, c, l, s);
    const auto H = point_hessian(model, q, c, l, s);
    for (int k = 0; k < n; ++k) {
      MatrixXd dJ(2, n);
      dJ.row(0) = H[0].col(k).transpose();
      dJ.row(1) = H[1].col(k).transpose();
      const MatrixXd prod = Jv.transpose() * dJ;
      dM[k] += g.mass * (prod + prod.transpose());
    }
  });
  return dM;
}

std::vector<MatrixXd> christoffel_matrices(const RobotModel& model,
                                           const VectorXd& q) {
  const int n = model.dof();
  const auto dM = mass_matrix_partials(model, q);
  std::vector<MatrixXd> gamma(n, MatrixXd::Zero(n, n));
  for (int k = 0; k < n; ++k)
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        gamma[k](i, j) = 0.5 * (dM[k](i, j) + dM[j](i, k) - dM[i](j, k));
  return gamma;
}

MatrixXd coriolis_matrix(const RobotModel& model, const VectorXd& q,
                         const VectorXd& q_dot) {
  const int n = model.dof();
  MatrixXd C = MatrixXd::Zero(n, n);
  const auto gamma = christoffel_matrices(model, q);
  for (int k = 0; k < n; ++k) C += gamma[k] * q_dot[k];
  return C;
}

double gravity_potential(const RobotModel& model, const VectorXd& q) {
  double u = 0.0;
  for_each_link(model, [&](int c, int l, const LinkGeometry& g) {
    u -= g.mass * model.gravity.dot(forward_point(model, q, c, l, com_fraction(g)));
  });
  return u;
}

VectorXd gravity_vector(const RobotModel& model, const VectorXd& q) {
  VectorXd G = VectorXd::Zero(model.dof());
  for_each_link(model, [&](int c, int l, const LinkGeometry& g) {
    G -= g.mass * point_jacobian(model, q, c, l, com_fraction(g)).transpose() *
         model.gravity;
  });
  return G;
}

MatrixXd gravity_jacobian(const RobotModel& model, const VectorXd& q) {
  const int n = model.dof();
  MatrixXd dG = MatrixXd::Zero(n, n);
  for_each_link(model, [&](int c, int l, const LinkGeometry& g) {
    const auto H = point_hessian(model, q, c, l, com_fraction(g));
    dG -= g.mass * (model.gravity.x() * H[0] + model.gravity.y() * H[1]);
  });
  return dG;
}

double kinetic_energy(const RobotModel& model, const State& state) {
  return 0.5 * state.q_dot.dot(mass_matrix(model, state.q) * state.q_dot);
}

VectorXd forward_dynamics(const RobotModel& model, const State& state,
                          const VectorXd& tau, const VectorXd& f_ext) {
  return constrained_dynamics(model, state, tau, f_ext, {});
}

VectorXd constrained_dynamics(const RobotModel& model, const State& state,
                              const VectorXd& tau, const VectorXd& f_ext,
                              const std::vector<int>& clamped) {
  const int n = model.dof();
  if (state.q.size() != n || state.q_dot.size() != n)
    throw Error(ErrorKind::Argument, "state has wrong dimension");
  if (tau.size() != model.num_actuated())
    throw Error(ErrorKind::Argument, "torque has wrong dimension");
  VectorXd rhs = model.actuation_map() * tau - bias_force(model, state);
  if (f_ext.size() == n) rhs += f_ext;
  const MatrixXd M = mass_matrix(model, state.q);
  if (clamped.empty()) return factor_mass(M).solve(rhs);

  std::vector<int> free;
  for (int i = 0; i < n; ++i)
    if (std::find(clamped.begin(), clamped.end(), i) == clamped.end())
      free.push_back(i);
  VectorXd qdd = VectorXd::Zero(n);
  if (free.empty()) return qdd;
  const VectorXd sub = factor_mass(gather(M, free, free)).solve(gather(rhs, free));
  scatter(qdd, free, sub);
  return qdd;
}

TrajectoryLog simulate(const RobotModel& model, const State& initial,
                       const SimulationHooks& hooks, double dt,
                       std::size_t n_steps) {
  if (!(dt > 0.0)) throw Error(ErrorKind::Argument, "dt must be > 0");
  if (!hooks.torque) throw Error(ErrorKind::Argument, "no torque provider");
  const int n = model.dof();

  TrajectoryLog log;
  log.n = n;
  log.m = model.num_actuated();
  const std::size_t rows = n_steps + 1;
  for (auto* v : {&log.t, &log.kinetic, &log.elastic, &log.gravitational, &log.lyapunov})
    v->reserve(rows);
  log.q.reserve(rows);
  log.q_dot.reserve(rows);
  log.tau.reserve(rows);

  auto record = [&](const State& s) {
    log.t.push_back(s.t);
    log.q.push_back(s.q);
    log.q_dot.push_back(s.q_dot);
    log.tau.push_back(hooks.torque(s));
    log.kinetic.push_back(kinetic_energy(model, s));
    log.elastic.push_back(elastic_energy(model, s.q));
    log.gravitational.push_back(gravity_potential(model, s.q));
    log.lyapunov.push_back(hooks.lyapunov ? hooks.lyapunov(s)
                                          : std::numeric_limits<double>::quiet_NaN());
  };

  std::size_t step = 0;
  auto derivative = [&](const State& s, VectorXd& dq, VectorXd& dqd) {
    if (!s.q.allFinite() || !s.q_dot.allFinite())
      throw DivergenceError(step, "simulation diverged at step " + std::to_string(step));
    const VectorXd f = hooks.external ? hooks.external(s) : VectorXd();
    dq = s.q_dot;
    dqd = constrained_dynamics(model, s, hooks.torque(s), f, hooks.clamped);
  };

  State s = initial;
  for (int i : hooks.clamped) s.q_dot[i] = 0.0;
  record(s);

  VectorXd k1q, k1v, k2q, k2v, k3q, k3v, k4q, k4v;
  for (step = 1; step <= n_steps; ++step) {
    derivative(s, k1q, k1v);
    State mid{s.q + 0.5 * dt * k1q, s.q_dot + 0.5 * dt * k1v, s.t + 0.5 * dt};
    derivative(mid, k2q, k2v);
    mid = {s.q + 0.5 * dt * k2q, s.q_dot + 0.5 * dt * k2v, s.t + 0.5 * dt};
    derivative(mid, k3q, k3v);
    const State end{s.q + dt * k3q, s.q_dot + dt * k3v, s.t + dt};
    derivative(end, k4q, k4v);
    s.q += dt / 6.0 * (k1q + 2.0 * k2q + 2.0 * k3q + k4q);
    s.q_dot += dt / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
    s.t = initial.t + static_cast<double>(step) * dt;
    if (!s.q.allFinite() || !s.q_dot.allFinite())
      throw DivergenceError(step, "simulation diverged at step " + std::to_string(step));
    if (hooks.after_step) hooks.after_step(s, dt);
    record(s);
  }
  return log;
}

ConfigRegion ConfigRegion::full(int n) {
  return {VectorXd::Constant(n, -std::numbers::pi), VectorXd::Constant(n, std::numbers::pi)};
}

SystemBounds estimate_bounds(const RobotModel& model, const ConfigRegion& region,
                             int density, double inflation) {
  const int n = model.dof();
  if (region.lower.size() != n || region.upper.size() != n)
    throw Error(ErrorKind::Argument, "region has wrong dimension");
  if ((region.upper - region.lower).minCoeff() < 0.0)
    throw Error(ErrorKind::Argument, "region is empty");
  if (density < 1) throw Error(ErrorKind::Argument, "grid density must be >= 1");
  if (!(inflation >= 1.0)) throw Error(ErrorKind::Argument, "inflation must be >= 1");

  SystemBounds b;
  b.grid_density = density;
  b.inflation = inflation;
  b.lambda_min_M = std::numeric_limits<double>::infinity();

  auto axis_value = [&](int axis, int idx) {
    if (density == 1) return 0.5 * (region.lower[axis] + region.upper[axis]);
    return region.lower[axis] +
           (region.upper[axis] - region.lower[axis]) * idx / (density - 1);
  };

  std::vector<int> idx(n, 0);
  VectorXd q(n);
  while (true) {
    for (int a = 0; a < n; ++a) q[a] = axis_value(a, idx[a]);
    ++b.samples;

    Eigen::SelfAdjointEigenSolver<MatrixXd> eig(mass_matrix(model, q),
                                                Eigen::EigenvaluesOnly);
    b.lambda_min_M = std::min(b.lambda_min_M, eig.eigenvalues().minCoeff());
    b.lambda_max_M = std::max(b.lambda_max_M, eig.eigenvalues().maxCoeff());

    // ||C(q, e)|| <= ||sum_k e_k Gamma_k||_F <= sqrt(sum_k ||Gamma_k||_F^2)
    double cc = 0.0;
    for (const auto& g : christoffel_matrices(model, q)) cc += g.squaredNorm();
    b.gamma_C = std::max(b.gamma_C, std::sqrt(cc));

    b.gamma_UG = std::max(b.gamma_UG, std::abs(gravity_potential(model, q)));
    b.gamma_G = std::max(b.gamma_G, gravity_vector(model, q).norm());
    const MatrixXd dG = gravity_jacobian(model, q);
    Eigen::SelfAdjointEigenSolver<MatrixXd> eg(0.5 * (dG + dG.transpose()),
                                               Eigen::EigenvaluesOnly);
    b.gamma_dG = std::max(b.gamma_dG, eg.eigenvalues().cwiseAbs().maxCoeff());

    int a = 0;
    while (a < n && ++idx[a] == density) idx[a++] = 0;
    if (a == n) break;
  }

  b.gamma_C *= inflation;
  b.lambda_max_M *= inflation;
  b.lambda_min_M /= inflation;
  b.gamma_UG *= inflation;
  b.gamma_G *= inflation;
  b.gamma_dG *= inflation;
  return b;
}

}  // namespace softcoupled
