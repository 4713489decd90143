#include "softcoupled/control.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <limits>
#include <string>

#include "softcoupled/coupling.hpp"
#include "softcoupled/errors.hpp"
#include "softcoupled/kinematics.hpp"

namespace softcoupled {
namespace {

constexpr int kMaxNewtonIterations = 100;
constexpr double kResidualTolerance = 1e-10;
constexpr double kResidualTarget = 1e-13;

bool is_spd(const MatrixXd& m) {
  if (m.rows() != m.cols() || m.size() == 0) return false;
  if (!m.isApprox(m.transpose(), 1e-12)) return false;
  Eigen::LLT<MatrixXd> llt(m);
  return llt.info() == Eigen::Success;
}

double min_eigenvalue(const MatrixXd& m) {
  Eigen::SelfAdjointEigenSolver<MatrixXd> eig(0.5 * (m + m.transpose()),
                                              Eigen::EigenvaluesOnly);
  return eig.eigenvalues().minCoeff();
}

double spectral_norm(const MatrixXd& m) {
  if (m.size() == 0) return 0.0;
  Eigen::JacobiSVD<MatrixXd> svd(m);
  return svd.singularValues()(0);
}

VectorXd zero_dynamics_residual(const RobotModel& model, const VectorXd& q) {
  const auto u = model.unactuated();
  return gather(elastic_force(model, q) + gravity_vector(model, q), u);
}

}  // namespace

VectorXd join_configuration(const RobotModel& model, const VectorXd& q_a,
                            const VectorXd& q_u) {
  const auto u = model.unactuated();
  if (q_a.size() != model.num_actuated() || q_u.size() != static_cast<int>(u.size()))
    throw Error(ErrorKind::Argument, "partition dimensions do not match the model");
  VectorXd q(model.dof());
  scatter(q, model.actuated, q_a);
  scatter(q, u, q_u);
  return q;
}

double equilibrium_residual(const RobotModel& model, const VectorXd& q_bar_a,
                            const VectorXd& q_u) {
  return zero_dynamics_residual(model, join_configuration(model, q_bar_a, q_u)).norm();
}

VectorXd equilibrium_solve(const RobotModel& model, const VectorXd& q_bar_a,
                           const VectorXd& initial_guess) {
  const auto u = model.unactuated();
  if (u.empty()) return VectorXd();
  VectorXd q = join_configuration(model, q_bar_a, initial_guess);
  VectorXd r = zero_dynamics_residual(model, q);
  double rnorm = r.norm();

  for (int it = 0; it < kMaxNewtonIterations && rnorm > kResidualTarget; ++it) {
    const ElasticTerms el = assemble_total_elastic(model, q);
    const MatrixXd J = el.K_uu + gather(gravity_jacobian(model, q), u, u);
    Eigen::FullPivLU<MatrixXd> lu(J);
    if (!lu.isInvertible())
      throw Error(ErrorKind::Singular,
                  "equilibrium Jacobian K_uu + dG_u/dq_u is singular");
    const VectorXd dx = lu.solve(-r);

    double step = 1.0;
    bool accepted = false;
    for (int h = 0; h < 40; ++h, step *= 0.5) {
      VectorXd trial = q;
      scatter(trial, u, gather(q, u) + step * dx);
      const VectorXd rt = zero_dynamics_residual(model, trial);
      if (rt.norm() < rnorm) {
        q = trial;
        r = rt;
        rnorm = rt.norm();
        accepted = true;
        break;
      }
    }
    if (!accepted) break;  // no further decrease possible at machine precision
  }

  if (!(rnorm < kResidualTolerance))
    throw SolverError(rnorm, "equilibrium solve did not converge (residual " +
                                 std::to_string(rnorm) + ")");
  const ElasticTerms el = assemble_total_elastic(model, q);
  Eigen::FullPivLU<MatrixXd> lu(el.K_uu + gather(gravity_jacobian(model, q), u, u));
  if (!lu.isInvertible())
    throw Error(ErrorKind::Singular, "equilibrium is singular (K_uu + dG_u/dq_u)");
  return gather(q, u);
}

const char* to_string(Compensation c) noexcept {
  switch (c) {
    case Compensation::Feedforward: return "feedforward";
    case Compensation::Feedback: return "feedback";
    case Compensation::None: return "none";
  }
  return "unknown";
}

Compensation compensation_from_string(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (n == "feedforward") return Compensation::Feedforward;
  if (n == "feedback") return Compensation::Feedback;
  if (n == "none") return Compensation::None;
  throw Error(ErrorKind::Argument, "unknown compensation '" + name + "'");
}

void RegulatorConfig::validate(const RobotModel& model) const {
  const int m = model.num_actuated();
  const int nu = model.dof() - m;
  if (K_P.rows() != m || K_P.cols() != m || !is_spd(K_P))
    throw Error(ErrorKind::Argument, "K_P must be an m x m symmetric positive definite matrix");
  if (K_D.rows() != m || K_D.cols() != m || !is_spd(K_D))
    throw Error(ErrorKind::Argument, "K_D must be an m x m symmetric positive definite matrix");
  if (q_bar_a.size() != m)
    throw Error(ErrorKind::Argument, "q_bar_a must have one entry per actuated joint");
  if (q_bar_u.size() != 0 && q_bar_u.size() != nu)
    throw Error(ErrorKind::Argument, "q_bar_u must have one entry per unactuated joint");
}

RegulatorConfig resolve_compensation_point(const RegulatorConfig& config,
                                           const RobotModel& model) {
  RegulatorConfig out = config;
  if (out.q_bar_u.size() == 0) {
    const int nu = model.dof() - model.num_actuated();
    out.q_bar_u = equilibrium_solve(model, config.q_bar_a, VectorXd::Zero(nu));
  }
  return out;
}

VectorXd regulate(const RegulatorConfig& config, const RobotModel& model,
                  const State& state) {
  const auto& a = model.actuated;
  const VectorXd q_a = gather(state.q, a);
  const VectorXd qd_a = gather(state.q_dot, a);
  VectorXd tau = gather(gravity_vector(model, state.q), a) - config.K_D * qd_a +
                 config.K_P * (config.q_bar_a - q_a);
  switch (config.compensation) {
    case Compensation::None:
      break;
    case Compensation::Feedforward: {
      if (config.q_bar_u.size() == 0)
        throw Error(ErrorKind::Argument,
                    "feedforward compensation needs q_bar_u (see resolve_compensation_point)");
      const VectorXd qc = join_configuration(model, config.q_bar_a, config.q_bar_u);
      tau += gather(elastic_force(model, qc), a);
      break;
    }
    case Compensation::Feedback: {
      const VectorXd qc =
          join_configuration(model, config.q_bar_a, gather(state.q, model.unactuated()));
      tau += gather(elastic_force(model, qc), a);
      break;
    }
  }
  return tau;
}

GainCertificate certify_gains(const RobotModel& model, const RegulatorConfig& config,
                              const ConfigRegion& region, const CertifyOptions& options) {
  if (!all_linear(model))
    throw Error(ErrorKind::UnsupportedFamily,
                "gain certificate is defined for the linear coupling family only");
  const RegulatorConfig cfg = resolve_compensation_point(config, model);
  cfg.validate(model);

  GainCertificate c;
  c.bounds = estimate_bounds(model, region, options.grid_density, options.inflation);
  c.alpha_G = c.bounds.gamma_G;
  c.alpha_UG = c.bounds.gamma_UG;
  c.alpha_dG = c.bounds.gamma_dG;

  const ElasticTerms el = assemble_total_elastic(model, VectorXd::Zero(model.dof()));
  c.norm_K_au = spectral_norm(el.K_au);
  c.norm_q_bar_u = cfg.q_bar_u.norm();
  c.alpha_GK = 2.0 * c.alpha_G + c.alpha_dG + 2.0 * c.norm_K_au * c.norm_q_bar_u;

  const int n = model.dof();
  const auto& a = model.actuated;
  MatrixXd D_hat = model.damping_matrix();
  for (int i = 0; i < model.num_actuated(); ++i)
    for (int j = 0; j < model.num_actuated(); ++j) D_hat(a[i], a[j]) += cfg.K_D(i, j);
  c.lambda_min_Dhat = min_eigenvalue(D_hat);
  MatrixXd D_hat_a(model.num_actuated(), n);
  for (int i = 0; i < model.num_actuated(); ++i) D_hat_a.row(i) = D_hat.row(a[i]);
  c.sigma_max_Dhat_a = spectral_norm(D_hat_a);

  const double gC = c.bounds.gamma_C;
  const double lmax = c.bounds.lambda_max_M;
  const double lmin = c.bounds.lambda_min_M;
  c.gamma_1_lower = (gC + 4.0 * std::sqrt(2.0) * lmax) / (std::sqrt(2.0) * c.lambda_min_Dhat);
  c.gamma_1 = options.gamma_1_factor * c.gamma_1_lower;
  c.gamma_2 = -2.0 * lmax * lmax / (c.gamma_1 * lmin) - c.gamma_1 * (c.alpha_G + c.alpha_UG);

  c.lambda_min_KP_Kaa = min_eigenvalue(cfg.K_P + el.K_aa);
  const double q11 = c.gamma_1 * c.lambda_min_Dhat - gC / std::sqrt(2.0) - 4.0 * lmax;
  const double q12 = -(c.gamma_1 * c.alpha_GK + c.sigma_max_Dhat_a);
  const double q22 = 2.0 * c.lambda_min_KP_Kaa;
  c.Q << q11, q12, q12, q22;
  c.det_Q = q11 * q22 - q12 * q12;
  c.kp_lower_bound = q11 > 0.0 ? q12 * q12 / (2.0 * q11)
                               : std::numeric_limits<double>::infinity();

  if (!(q11 > 0.0)) {
    c.failure = "Q11 = gamma_1 lambda_min(D_hat) - gamma_C/sqrt(2) - 4 lambda_max(M) = " +
                std::to_string(q11) + " is not > 0";
  } else if (!(c.det_Q > 0.0)) {
    c.failure = "det Q = " + std::to_string(c.det_Q) +
                " is not > 0 (need lambda_min(K_P + K_aa) > " +
                std::to_string(c.kp_lower_bound) + ", have " +
                std::to_string(c.lambda_min_KP_Kaa) + ")";
  }
  c.verdict = c.failure.empty();
  return c;
}

double lyapunov_zero_dynamics(const RobotModel& model, const VectorXd& q_bar_a,
                              const State& state) {
  const auto u = model.unactuated();
  const VectorXd q = join_configuration(model, q_bar_a, gather(state.q, u));
  const VectorXd qd_u = gather(state.q_dot, u);
  const MatrixXd M_uu = gather(mass_matrix(model, q), u, u);
  return 0.5 * qd_u.dot(M_uu * qd_u) + elastic_energy(model, q) +
         gravity_potential(model, q);
}

double lyapunov_closed_loop(const RobotModel& model, const RegulatorConfig& config,
                            double gamma_1, const State& state) {
  if (!all_linear(model))
    throw Error(ErrorKind::UnsupportedFamily,
                "closed-loop Lyapunov function is defined for the linear coupling family only");
  if (config.q_bar_u.size() == 0)
    throw Error(ErrorKind::Argument, "closed-loop Lyapunov function needs q_bar_u");
  const auto& a = model.actuated;
  const auto u = model.unactuated();
  const VectorXd& q = state.q;
  const VectorXd& qd = state.q_dot;

  const VectorXd q_ref = join_configuration(model, config.q_bar_a, config.q_bar_u);
  const VectorXd q_tilde = q - q_ref;
  const VectorXd e_a = gather(q_tilde, a);
  const double denom = 1.0 + 2.0 * e_a.squaredNorm();

  const ElasticTerms el = assemble_total_elastic(model, q);
  MatrixXd K_hat = el.stiffness;
  for (std::size_t i = 0; i < a.size(); ++i)
    for (std::size_t j = 0; j < a.size(); ++j) K_hat(a[i], a[j]) += config.K_P(i, j);

  const MatrixXd M = mass_matrix(model, q);
  const VectorXd G_a = gather(gravity_vector(model, q), a);

  const double energy_like = 0.5 * qd.dot(M * qd) + 0.5 * q_tilde.dot(K_hat * q_tilde) -
                             e_a.dot(G_a) / denom -
                             e_a.dot(el.K_au * config.q_bar_u) / denom +
                             gravity_potential(model, q);
  const VectorXd Mqd_a = gather(VectorXd(M * qd), a);
  return gamma_1 * energy_like + 2.0 * e_a.dot(Mqd_a) / denom;
}

double estimate_tip_force(const RobotModel& model, const TipProbe& probe,
                          const VectorXd& q) {
  const auto u = model.unactuated();
  if (std::find(u.begin(), u.end(), probe.coordinate) == u.end())
    throw Error(ErrorKind::Argument, "force probe coordinate must be unactuated");
  const SegmentRef joint = model.coordinate_owner(probe.coordinate);
  const Vector2d tip = forward_point(model, q, probe.tip.chain, probe.tip.link, 1.0);
  const Vector2d pivot = joint_position(model, q, joint.chain, joint.link);
  const double arm = (tip - pivot).norm();
  if (arm < 1e-12)
    throw Error(ErrorKind::DegenerateGeometry, "force probe has zero moment arm");
  return elastic_force(model, q)[probe.coordinate] / arm;
}

void ForcePidConfig::validate(const RobotModel& model) const {
  if (model.num_actuated() != 1)
    throw Error(ErrorKind::Argument, "force control needs exactly one actuated joint");
  if (!(K_P >= 0 && K_I >= 0 && K_D >= 0))
    throw Error(ErrorKind::Argument, "force PID gains must be >= 0");
  if (!(integral_clamp > 0))
    throw Error(ErrorKind::Argument, "integral_clamp must be > 0");
  if (q_bar.size() != model.dof())
    throw Error(ErrorKind::Argument, "force PID q_bar must be a full configuration");
}

ForcePidOutput force_pid(const ForcePidConfig& config, const RobotModel& model,
                         const State& state, double integral, double dt) {
  const auto& a = model.actuated;
  const double e_f = estimate_tip_force(model, config.probe, state.q) - config.F_d;
  ForcePidOutput out;
  out.integral = std::clamp(integral + e_f * dt, -config.integral_clamp, config.integral_clamp);
  out.tau = VectorXd::Constant(1, config.K_P * e_f + config.K_I * out.integral) -
            config.K_D * gather(state.q_dot, a) +
            gather(elastic_force(model, config.q_bar), a);
  if (config.gravity_compensation) out.tau += gather(gravity_vector(model, state.q), a);
  return out;
}

VectorXd solve_force_reference(const RobotModel& model, const TipProbe& probe,
                               double F_d, const VectorXd& q_bar_u, double q_a_guess) {
  if (model.num_actuated() != 1)
    throw Error(ErrorKind::Argument, "force reference needs exactly one actuated joint");
  VectorXd q = join_configuration(model, VectorXd::Constant(1, q_a_guess), q_bar_u);
  const int ia = model.actuated[0];
  double r = estimate_tip_force(model, probe, q) - F_d;
  for (int it = 0; it < kMaxNewtonIterations && std::abs(r) > 1e-13; ++it) {
    const double h = 1e-6;
    VectorXd qp = q, qm = q;
    qp[ia] += h;
    qm[ia] -= h;
    const double slope =
        (estimate_tip_force(model, probe, qp) - estimate_tip_force(model, probe, qm)) / (2 * h);
    if (std::abs(slope) < 1e-14)
      throw Error(ErrorKind::Singular, "force estimate does not depend on the actuated joint");
    double step = 1.0;
    const double dx = -r / slope;
    for (int hh = 0; hh < 40; ++hh, step *= 0.5) {
      VectorXd trial = q;
      trial[ia] += step * dx;
      const double rt = estimate_tip_force(model, probe, trial) - F_d;
      if (std::abs(rt) < std::abs(r)) {
        q = trial;
        r = rt;
        break;
      }
    }
  }
  if (!(std::abs(r) < 1e-9))
    throw SolverError(std::abs(r), "force reference solve did not converge");
  return q;
}

}  // namespace softcoupled
