#pragma once

#include <functional>
#include <vector>

#include "softcoupled/model.hpp"

namespace softcoupled {

/// Joint-space inertia M(q), symmetric positive definite.
MatrixXd mass_matrix(const RobotModel& model, const VectorXd& q);

/// Partial derivatives dM/dq_k, k = 0..n-1.
std::vector<MatrixXd> mass_matrix_partials(const RobotModel& model,
                                           const VectorXd& q);

/// Christoffel symbols of the first kind arranged as n matrices Gamma_k, so
/// that C(q, qd) = sum_k Gamma_k qd_k. This makes Mdot - 2C skew-symmetric.
std::vector<MatrixXd> christoffel_matrices(const RobotModel& model,
                                           const VectorXd& q);

MatrixXd coriolis_matrix(const RobotModel& model, const VectorXd& q,
                         const VectorXd& q_dot);

double gravity_potential(const RobotModel& model, const VectorXd& q);
/// G = dU_G/dq.
VectorXd gravity_vector(const RobotModel& model, const VectorXd& q);
/// dG/dq, the Hessian of the gravity potential.
MatrixXd gravity_jacobian(const RobotModel& model, const VectorXd& q);

double kinetic_energy(const RobotModel& model, const State& state);

/// q_ddot = M^-1 (A tau + f_ext - C qd - G - F_K - D qd).
/// Throws Error(IllConditioned) when cond(M) > 1e12.
VectorXd forward_dynamics(const RobotModel& model, const State& state,
                          const VectorXd& tau, const VectorXd& f_ext = {});

/// As forward_dynamics, with the coordinates in `clamped` held at zero
/// acceleration; the remaining ones follow their own rows of the dynamics.
VectorXd constrained_dynamics(const RobotModel& model, const State& state,
                              const VectorXd& tau, const VectorXd& f_ext,
                              const std::vector<int>& clamped);

/// Time-stamped record of a simulation.
struct TrajectoryLog {
  int n = 0;
  int m = 0;
  std::vector<double> t;
  std::vector<VectorXd> q, q_dot, tau;
  std::vector<double> kinetic, elastic, gravitational, lyapunov;

  std::size_t size() const { return t.size(); }
  double total_energy(std::size_t i) const {
    return kinetic[i] + elastic[i] + gravitational[i];
  }
};

/// Callbacks used by simulate(). Only `torque` is required.
struct SimulationHooks {
  std::function<VectorXd(const State&)> torque;
  /// Generalized external force (contact, disturbances).
  std::function<VectorXd(const State&)> external;
  /// Called once after each accepted step with the new state.
  std::function<void(const State&, double dt)> after_step;
  /// Value written to the lyapunov column; NaN when absent.
  std::function<double(const State&)> lyapunov;
  /// Coordinates held fixed (zero-dynamics runs).
  std::vector<int> clamped;
};

/// Classical fixed-step RK4 over n_steps steps; torque is re-evaluated at
/// every stage. Throws DivergenceError naming the step on non-finite state.
TrajectoryLog simulate(const RobotModel& model, const State& initial,
                       const SimulationHooks& hooks, double dt,
                       std::size_t n_steps);

/// Axis-aligned box in configuration space.
struct ConfigRegion {
  VectorXd lower;
  VectorXd upper;

  /// [-pi, pi]^n
  static ConfigRegion full(int n);
};

struct SystemBounds {
  double gamma_C = 0.0;
  double lambda_min_M = 0.0;
  double lambda_max_M = 0.0;
  double gamma_UG = 0.0;
  double gamma_G = 0.0;
  double gamma_dG = 0.0;
  int grid_density = 0;
  std::size_t samples = 0;
  double inflation = 1.0;
};

/// Sample the system-property constants on a regular grid with `density`
/// points per axis (endpoints included). Maxima are multiplied by
/// `inflation` and lambda_min(M) divided by it.
SystemBounds estimate_bounds(const RobotModel& model,
                             const ConfigRegion& region, int density,
                             double inflation = 1.1);

}  // namespace softcoupled
