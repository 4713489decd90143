#pragma once

#include <string>

#include "softcoupled/dynamics.hpp"
#include "softcoupled/model.hpp"

namespace softcoupled {

/// Unactuated configuration that balances springs, couplings and gravity
/// with q_a held at q_bar_a: F_K,u(q_bar_a, q_u) + G_u(q_bar_a, q_u) = 0.
/// Damped Newton (step halving, at most 100 iterations), residual < 1e-10.
VectorXd equilibrium_solve(const RobotModel& model, const VectorXd& q_bar_a,
                           const VectorXd& initial_guess);

/// Norm of the zero-dynamics equilibrium residual at (q_bar_a, q_u).
double equilibrium_residual(const RobotModel& model, const VectorXd& q_bar_a,
                            const VectorXd& q_u);

/// Assemble the full configuration from actuated and unactuated parts.
VectorXd join_configuration(const RobotModel& model, const VectorXd& q_a,
                            const VectorXd& q_u);

enum class Compensation { Feedforward, Feedback, None };

const char* to_string(Compensation c) noexcept;
Compensation compensation_from_string(const std::string& name);

struct RegulatorConfig {
  MatrixXd K_P;  // m x m, symmetric positive definite
  MatrixXd K_D;  // m x m, symmetric positive definite
  Compensation compensation = Compensation::Feedforward;
  VectorXd q_bar_a;
  /// Elastic compensation point for Feedforward. Empty selects the
  /// equilibrium of q_bar_a.
  VectorXd q_bar_u;

  void validate(const RobotModel& model) const;
};

/// Collocated PD with online gravity cancellation and elastic compensation:
///   tau = G_a(q) - K_D qd_a + F_K,a(q_bar_a, q_c) + K_P (q_bar_a - q_a)
/// where q_c is q_bar_u (Feedforward) or the measured q_u (Feedback). With
/// compensation None the F_K,a term is dropped.
VectorXd regulate(const RegulatorConfig& config, const RobotModel& model,
                  const State& state);

/// Copy of `config` with q_bar_u filled in from equilibrium_solve when empty.
RegulatorConfig resolve_compensation_point(const RegulatorConfig& config,
                                           const RobotModel& model);

/// Constants of the closed-loop stability argument for the PD regulator.
struct GainCertificate {
  SystemBounds bounds;
  double alpha_G = 0.0;
  double alpha_UG = 0.0;
  double alpha_dG = 0.0;
  double alpha_GK = 0.0;
  double norm_K_au = 0.0;
  double norm_q_bar_u = 0.0;
  double gamma_1_lower = 0.0;
  double gamma_1 = 0.0;
  double gamma_2 = 0.0;
  double lambda_min_Dhat = 0.0;
  double sigma_max_Dhat_a = 0.0;
  double lambda_min_KP_Kaa = 0.0;
  Eigen::Matrix2d Q = Eigen::Matrix2d::Zero();
  double det_Q = 0.0;
  /// Smallest lambda_min(K_P + K_aa) for which det Q > 0.
  double kp_lower_bound = 0.0;
  bool verdict = false;
  /// Empty on pass; otherwise the first violated Sylvester condition.
  std::string failure;
};

struct CertifyOptions {
  int grid_density = 7;
  double inflation = 1.1;
  /// gamma_1 = gamma_1_factor x its lower bound.
  double gamma_1_factor = 1.01;
};

/// Evaluate the Sylvester conditions on Q for the given gains. Only the
/// Linear coupling family is supported (constant stiffness blocks).
GainCertificate certify_gains(const RobotModel& model,
                              const RegulatorConfig& config,
                              const ConfigRegion& region,
                              const CertifyOptions& options = {});

/// Lyapunov function of the clamped zero dynamics:
///   V = 1/2 qd_u' M_uu qd_u + U_K(q_bar_a, q_u) + U_G(q_bar_a, q_u).
double lyapunov_zero_dynamics(const RobotModel& model, const VectorXd& q_bar_a,
                              const State& state);

/// Closed-loop Lyapunov function of the PD regulator with the error
/// coordinates q~ = q - (q_bar_a, q_bar_u) and e_a = q~_a.
double lyapunov_closed_loop(const RobotModel& model,
                            const RegulatorConfig& config, double gamma_1,
                            const State& state);

/// Point where the unactuated structure touches the environment, and the
/// unactuated coordinate whose elastic torque is read as a force sensor.
struct TipProbe {
  int coordinate = 1;
  SegmentRef tip{1, 0};
};

/// Contact force estimated from elasticity: the elastic torque F_K,u on the
/// probe coordinate divided by the moment arm from its joint to the tip.
/// Positive when the elastic torque pushes the link towards negative angles.
double estimate_tip_force(const RobotModel& model, const TipProbe& probe,
                          const VectorXd& q);

struct ForcePidConfig {
  double K_P = 0.0;
  double K_I = 0.0;
  double K_D = 0.0;
  double F_d = 0.0;           // N
  double integral_clamp = 1;  // N s
  /// Configuration whose actuated elastic torque is fed forward.
  VectorXd q_bar;
  bool gravity_compensation = false;
  TipProbe probe;

  void validate(const RobotModel& model) const;
};

struct ForcePidOutput {
  VectorXd tau;
  double integral = 0.0;
};

/// PID on the elastic force estimate e_f = F_hat(q) - F_d:
///   tau = K_P e_f - K_D qd_a + K_I int(e_f) + F_K,a(q_bar) [+ G_a(q)]
/// The integral advances by e_f dt (dt = 0 leaves it unchanged) and is
/// clamped to +-integral_clamp.
ForcePidOutput force_pid(const ForcePidConfig& config, const RobotModel& model,
                         const State& state, double integral, double dt);

/// Configuration with q_u = q_bar_u (the contact posture) and q_a such that
/// the force estimate equals F_d. Requires a single actuated coordinate.
VectorXd solve_force_reference(const RobotModel& model, const TipProbe& probe,
                               double F_d, const VectorXd& q_bar_u,
                               double q_a_guess = 0.0);

}  // namespace softcoupled
