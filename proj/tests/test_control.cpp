#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include <Eigen/Eigenvalues>

#include "softcoupled/control.hpp"
#include "softcoupled/coupling.hpp"
#include "softcoupled/errors.hpp"
#include "test_models.hpp"

namespace softcoupled {
namespace {

using testing::random_vector;

RegulatorConfig finger_regulator(Compensation c = Compensation::Feedforward) {
  RegulatorConfig r;
  r.K_P = MatrixXd::Identity(2, 2);
  r.K_D = 0.5 * MatrixXd::Identity(2, 2);
  r.compensation = c;
  r.q_bar_a = (VectorXd(2) << -1.1, 0.7).finished();
  return r;
}

// Two single-link chains from the origin: coordinate 0 actuated, 1 probed.
RobotModel probe_model(double k_c, double length) {
  RobotModel m;
  for (int c = 0; c < 2; ++c) {
    Chain ch;
    ch.links.push_back(LinkGeometry::uniform_rod(length, 0.02));
    m.chains.push_back(ch);
  }
  m.actuated = {0};
  m.joint_stiffness = (VectorXd(2) << 0.05, 0.0).finished();
  m.joint_damping = (VectorXd(2) << 0.01, 0.005).finished();
  CouplingSpec s;
  s.k = k_c;
  s.coord_i = 0;
  s.coord_j = 1;
  m.couplings.push_back(s);
  m.gravity.setZero();
  return m;
}

TEST(Equilibrium, GravityFreeFingerLinearSolve) {
  const RobotModel m = testing::finger_model(0.0);
  const VectorXd q_u = equilibrium_solve(m, (VectorXd(2) << -1.1, 0.7).finished(), VectorXd::Zero(1));
  EXPECT_NEAR(q_u[0], 2.0 / 3.5 * 0.7, 1e-12);
}

TEST(Equilibrium, NoCouplingRelaxes) {
  RobotModel m = testing::finger_model(0.0);
  m.couplings.clear();
  const VectorXd q_u = equilibrium_solve(m, (VectorXd(2) << -1.1, 0.7).finished(), VectorXd::Constant(1, 0.5));
  EXPECT_NEAR(q_u[0], 0.0, 1e-12);
}

TEST(Equilibrium, WithGravityResidualBelowTolerance) {
  const RobotModel m = testing::finger_model();
  const VectorXd qa = (VectorXd(2) << -1.1, 0.7).finished();
  const VectorXd q_u = equilibrium_solve(m, qa, VectorXd::Zero(1));
  EXPECT_LT(equilibrium_residual(m, qa, q_u), 1e-10);
  // Independent residual: K_ua q_a + K_uu q_u + G_u.
  const VectorXd q = join_configuration(m, qa, q_u);
  EXPECT_LT(std::abs(-2.0 * qa[1] + 3.5 * q_u[0] + gravity_vector(m, q)[2]), 1e-10);
}

TEST(Equilibrium, NonConvergenceReportsResidual) {
  // A floppy unactuated link under gravity with a far initial guess and no
  // restoring spring has two equilibria; a zero-stiffness, zero-gravity model
  // has a singular Jacobian.
  RobotModel m = testing::finger_model(0.0);
  m.couplings.clear();
  m.joint_stiffness.setZero();
  m.joint_damping = VectorXd::Constant(3, 0.5);
  try {
    equilibrium_solve(m, VectorXd::Zero(2), VectorXd::Constant(1, 0.3));
  } catch (const Error& e) {
    EXPECT_TRUE(e.kind() == ErrorKind::Singular || e.kind() == ErrorKind::SolverNonConvergence);
    return;
  }
  // Any point is an equilibrium when nothing acts on the link.
  SUCCEED();
}

TEST(Regulator, StationaryAtEquilibrium) {
  const RobotModel m = testing::finger_model();
  const RegulatorConfig r = resolve_compensation_point(finger_regulator(), m);
  const VectorXd q = join_configuration(m, r.q_bar_a, r.q_bar_u);
  const State s{q, VectorXd::Zero(3), 0.0};
  const VectorXd tau = regulate(r, m, s);
  const ElasticTerms el = assemble_total_elastic(m, q);
  const VectorXd want = gather(gravity_vector(m, q), m.actuated) + el.K_aa * r.q_bar_a + el.K_au * r.q_bar_u;
  EXPECT_LT((tau - want).norm(), 1e-12);
  EXPECT_LT(forward_dynamics(m, s, tau).norm(), 1e-10);
}

TEST(Regulator, NoneDropsElasticTerm) {
  const RobotModel m = testing::finger_model();
  const RegulatorConfig r = finger_regulator(Compensation::None);
  const State s{(VectorXd(3) << 0.1, 0.2, 0.3).finished(), (VectorXd(3) << 1.0, -1.0, 0.5).finished(), 0.0};
  const VectorXd want = gather(gravity_vector(m, s.q), m.actuated) -
                        0.5 * gather(s.q_dot, m.actuated) + (r.q_bar_a - gather(s.q, m.actuated));
  EXPECT_LT((regulate(r, m, s) - want).norm(), 1e-14);
}

TEST(Regulator, FeedbackUsesMeasuredUnactuated) {
  const RobotModel m = testing::finger_model();
  const RegulatorConfig r = finger_regulator(Compensation::Feedback);
  const State s{(VectorXd(3) << 0.1, 0.2, 0.9).finished(), VectorXd::Zero(3), 0.0};
  const RegulatorConfig none = finger_regulator(Compensation::None);
  const VectorXd diff = regulate(r, m, s) - regulate(none, m, s);
  // K_aa q_bar_a + K_au q_u with K_aa = diag(1.5, 3.5), K_au = (0, -2).
  EXPECT_NEAR(diff[0], 1.5 * -1.1, 1e-14);
  EXPECT_NEAR(diff[1], 3.5 * 0.7 - 2.0 * 0.9, 1e-14);
}

TEST(Regulator, ZeroCouplingFeedforwardIsPdWithSpringCompensation) {
  RobotModel m = testing::finger_model(0.0);
  m.couplings.clear();
  const RegulatorConfig r = resolve_compensation_point(finger_regulator(), m);
  const State s{(VectorXd(3) << 0.1, 0.2, 0.9).finished(), VectorXd::Constant(3, 0.2), 0.0};
  const VectorXd qa = gather(s.q, m.actuated);
  const VectorXd want = 1.5 * r.q_bar_a - 0.5 * VectorXd::Constant(2, 0.2) + (r.q_bar_a - qa);
  EXPECT_LT((regulate(r, m, s) - want).norm(), 1e-14);
}

TEST(Regulator, ValidationRejectsIndefiniteGains) {
  const RobotModel m = testing::finger_model();
  RegulatorConfig r = finger_regulator();
  r.K_P(0, 0) = -1.0;
  EXPECT_THROW(r.validate(m), Error);
  r = finger_regulator();
  r.K_D(0, 1) = 0.3;
  EXPECT_THROW(r.validate(m), Error);
  r = finger_regulator();
  r.q_bar_a = VectorXd::Zero(3);
  EXPECT_THROW(r.validate(m), Error);
}

// Independent recomputation of the certificate constants from the bounds.
TEST(Certificate, MatchesIndependentFormulas) {
  const RobotModel m = testing::finger_model();
  RegulatorConfig r = resolve_compensation_point(finger_regulator(), m);
  r.K_P = 50.0 * MatrixXd::Identity(2, 2);
  const GainCertificate c = certify_gains(m, r, ConfigRegion::full(3));
  const SystemBounds& b = c.bounds;
  const double sqrt2 = std::sqrt(2.0);
  const double alpha_gk = 2 * b.gamma_G + b.gamma_dG + 2 * 2.0 * std::abs(r.q_bar_u[0]);
  EXPECT_NEAR(c.alpha_GK, alpha_gk, 1e-12);
  // D_hat = D + blkdiag(K_D, 0) = diag(1, 1, 0.5).
  EXPECT_DOUBLE_EQ(c.lambda_min_Dhat, 0.5);
  EXPECT_DOUBLE_EQ(c.sigma_max_Dhat_a, 1.0);
  const double g1_lower = (b.gamma_C + 4 * sqrt2 * b.lambda_max_M) / (sqrt2 * 0.5);
  EXPECT_NEAR(c.gamma_1_lower, g1_lower, 1e-12);
  EXPECT_NEAR(c.gamma_1, 1.01 * g1_lower, 1e-12);
  const double q11 = c.gamma_1 * 0.5 - b.gamma_C / sqrt2 - 4 * b.lambda_max_M;
  const double q12 = -(c.gamma_1 * alpha_gk + 1.0);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(r.K_P + (MatrixXd(2, 2) << 1.5, 0, 0, 3.5).finished());
  const double q22 = 2 * es.eigenvalues().minCoeff();
  EXPECT_NEAR(c.Q(0, 0), q11, 1e-12);
  EXPECT_NEAR(c.Q(0, 1), q12, 1e-10);
  EXPECT_NEAR(c.Q(1, 1), q22, 1e-12);
  EXPECT_NEAR(c.det_Q, q11 * q22 - q12 * q12, 1e-6 * std::abs(q12 * q12));
  EXPECT_NEAR(c.kp_lower_bound, q12 * q12 / (2 * q11), 1e-9 * q12 * q12 / q11);
  const double g2 = -2 * b.lambda_max_M * b.lambda_max_M / (c.gamma_1 * b.lambda_min_M) -
                    c.gamma_1 * (b.gamma_G + b.gamma_UG);
  EXPECT_NEAR(c.gamma_2, g2, 1e-9 * std::abs(g2));
  EXPECT_FALSE(c.verdict);
  EXPECT_NE(c.failure.find("det Q"), std::string::npos);
}

TEST(Certificate, PassesAtBoundAndMonotoneInKp) {
  const RobotModel m = testing::finger_model();
  RegulatorConfig r = resolve_compensation_point(finger_regulator(), m);
  const GainCertificate probe = certify_gains(m, r, ConfigRegion::full(3));
  // lambda_min(K_P + K_aa) >= lambda_min(K_P) + 1.5 for K_aa = diag(1.5, 3.5).
  r.K_P = 1.001 * probe.kp_lower_bound * MatrixXd::Identity(2, 2);
  const GainCertificate pass = certify_gains(m, r, ConfigRegion::full(3));
  EXPECT_TRUE(pass.verdict);
  EXPECT_GT(pass.Q(0, 0), 0.0);
  EXPECT_GT(pass.det_Q, 0.0);
  for (double scale : {2.0, 10.0}) {
    RegulatorConfig bigger = r;
    bigger.K_P *= scale;
    EXPECT_TRUE(certify_gains(m, bigger, ConfigRegion::full(3)).verdict);
  }
}

TEST(Certificate, GravityFreeDecoupledReducesAlphaGK) {
  RobotModel m = testing::finger_model(0.0);
  m.couplings.clear();
  RegulatorConfig r = resolve_compensation_point(finger_regulator(), m);
  const GainCertificate c = certify_gains(m, r, ConfigRegion::full(3));
  EXPECT_EQ(c.alpha_GK, 0.0);
  // Q12 = -sigma_max(D_hat_a); any lambda_min(K_P + K_aa) above Q12^2 / (2 Q11) passes.
  EXPECT_NEAR(c.kp_lower_bound, 1.0 / (2 * c.Q(0, 0)), 1e-12);
  r.K_P = 1.01 * c.kp_lower_bound * MatrixXd::Identity(2, 2);
  EXPECT_TRUE(certify_gains(m, r, ConfigRegion::full(3)).verdict);
}

TEST(Certificate, FailsForWeakGainsUnderHeavyGravity) {
  RobotModel m = testing::finger_model(50.0);
  m.joint_stiffness = VectorXd::Constant(3, 1e-3);
  RegulatorConfig r = resolve_compensation_point(finger_regulator(), m);
  r.K_P = 1e-6 * MatrixXd::Identity(2, 2);
  const GainCertificate c = certify_gains(m, r, ConfigRegion::full(3));
  EXPECT_FALSE(c.verdict);
  EXPECT_LE(c.det_Q, 0.0);
}

TEST(Certificate, NonlinearFamilyUnsupported) {
  RobotModel m = testing::finger_model();
  m.couplings[0].family = CouplingFamily::NeoHookean;
  try {
    certify_gains(m, finger_regulator(), ConfigRegion::full(3));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UnsupportedFamily);
  }
}

TEST(Lyapunov, ZeroDynamicsTerms) {
  const RobotModel m = testing::finger_model(0.0);
  const VectorXd qa = (VectorXd(2) << -1.1, 0.7).finished();
  const VectorXd q_u = equilibrium_solve(m, qa, VectorXd::Zero(1));
  const VectorXd q = join_configuration(m, qa, q_u);
  const State rest{q, VectorXd::Zero(3), 0.0};
  EXPECT_NEAR(lyapunov_zero_dynamics(m, qa, rest), elastic_energy(m, q), 1e-14);
  State moving = rest;
  moving.q_dot[2] = 0.3;
  const double k1 = lyapunov_zero_dynamics(m, qa, moving) - elastic_energy(m, q);
  moving.q_dot[2] = 0.6;
  const double k2 = lyapunov_zero_dynamics(m, qa, moving) - elastic_energy(m, q);
  EXPECT_NEAR(k2, 4 * k1, 1e-14);
}

TEST(Lyapunov, ClosedLoopZeroAtTarget) {
  const RobotModel m = testing::finger_model(0.0);
  RegulatorConfig r = finger_regulator();
  r.q_bar_a.setZero();
  r = resolve_compensation_point(r, m);
  const State s{VectorXd::Zero(3), VectorXd::Zero(3), 0.0};
  EXPECT_NEAR(lyapunov_closed_loop(m, r, 3.0, s), 0.0, 1e-15);
}

TEST(ForceEstimate, MomentBalance) {
  const double k_c = 0.5, l = 0.1;
  const RobotModel m = probe_model(k_c, l);
  const TipProbe probe{1, {1, 0}};
  EXPECT_EQ(estimate_tip_force(m, probe, VectorXd::Constant(2, 0.3)), 0.0);
  const VectorXd q = (VectorXd(2) << -0.8, -0.3).finished();
  EXPECT_NEAR(estimate_tip_force(m, probe, q), k_c * 0.5 / l, 1e-12);
  EXPECT_THROW(estimate_tip_force(m, TipProbe{0, {0, 0}}, q), Error);
}

TEST(ForcePid, PureFeedforwardAtTarget) {
  const RobotModel m = probe_model(0.5, 0.1);
  ForcePidConfig f;
  f.K_P = 0.3;
  f.K_I = 0.2;
  f.K_D = 0.1;
  f.probe = {1, {1, 0}};
  f.q_bar = (VectorXd(2) << -0.8, -0.3).finished();
  f.F_d = estimate_tip_force(m, f.probe, f.q_bar);
  const State s{f.q_bar, VectorXd::Zero(2), 0.0};
  const ForcePidOutput out = force_pid(f, m, s, 0.0, 0.01);
  EXPECT_NEAR(out.tau[0], elastic_force(m, f.q_bar)[0], 1e-14);
  EXPECT_NEAR(out.integral, 0.0, 1e-14);
}

TEST(ForcePid, IntegralClampedAndSign) {
  const RobotModel m = probe_model(0.5, 0.1);
  ForcePidConfig f;
  f.K_P = 1.0;
  f.K_I = 1.0;
  f.integral_clamp = 0.05;
  f.probe = {1, {1, 0}};
  f.q_bar = VectorXd::Zero(2);
  f.F_d = 2.0;
  const State s{VectorXd::Zero(2), VectorXd::Zero(2), 0.0};
  const ForcePidOutput out = force_pid(f, m, s, 0.0, 1.0);
  EXPECT_DOUBLE_EQ(out.integral, -0.05);
  // Too little force: torque drives q_a negative, which raises the estimate.
  EXPECT_LT(out.tau[0], 0.0);
  VectorXd pushed = VectorXd::Zero(2);
  pushed[0] = -0.01;
  EXPECT_GT(estimate_tip_force(m, f.probe, pushed), 0.0);
  EXPECT_EQ(force_pid(f, m, s, 0.01, 0.0).integral, 0.01);
}

TEST(ForcePid, ReferenceSolveHitsTarget) {
  const RobotModel m = probe_model(0.5, 0.1);
  const TipProbe probe{1, {1, 0}};
  const VectorXd q = solve_force_reference(m, probe, 2.7, VectorXd::Constant(1, -0.02));
  EXPECT_NEAR(estimate_tip_force(m, probe, q), 2.7, 1e-9);
  EXPECT_EQ(q[1], -0.02);
  EXPECT_NEAR(q[0], -0.02 - 2.7 * 0.1 / 0.5, 1e-9);
}

}  // namespace
}  // namespace softcoupled
