#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "softcoupled/errors.hpp"
#include "softcoupled/kinematics.hpp"
#include "test_models.hpp"

namespace softcoupled {
namespace {

using testing::fd_jacobian;
using testing::random_vector;

TEST(Kinematics, SingleLinkTip) {
  const RobotModel m = testing::pendulum(2.0);
  VectorXd q(1);
  q << std::numbers::pi / 2;
  const Vector2d tip = forward_point(m, q, 0, 0, 1.0);
  EXPECT_NEAR(tip.x(), 0.0, 1e-15);
  EXPECT_NEAR(tip.y(), 2.0, 1e-15);
  const Vector2d mid = forward_point(m, q, 0, 0, 0.5);
  EXPECT_NEAR(mid.y(), 1.0, 1e-15);
}

TEST(Kinematics, RelativeAnglesAccumulate) {
  const RobotModel m = testing::finger_model();
  VectorXd q(3);
  q << 0.3, -0.5, 0.4;
  const double a1 = 0.3, a2 = -0.2, a3 = 0.2;
  const Vector2d want(std::cos(a1) + std::cos(a2) + std::cos(a3),
                      std::sin(a1) + std::sin(a2) + std::sin(a3));
  EXPECT_LT((forward_point(m, q, 0, 2, 1.0) - want).norm(), 1e-14);
  EXPECT_NEAR(link_angle(m, q, 0, 2), a3, 1e-15);
  const Vector2d root3(std::cos(a1) + std::cos(a2), std::sin(a1) + std::sin(a2));
  EXPECT_LT((joint_position(m, q, 0, 2) - root3).norm(), 1e-14);
}

TEST(Kinematics, BaseAnchorOffsetsChain) {
  RobotModel m = testing::two_chains(1, 0.25);
  const VectorXd q = VectorXd::Zero(2);
  EXPECT_LT((forward_point(m, q, 1, 0, 0.0) - Vector2d(0.0, -0.25)).norm(), 1e-15);
}

TEST(Kinematics, JacobianMatchesFiniteDifference) {
  const RobotModel m = testing::two_chains(3, 0.1);
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd q = random_vector(rng, m.dof(), -3.0, 3.0);
    for (int c = 0; c < 2; ++c)
      for (int l = 0; l < 3; ++l) {
        const double s = 0.37;
        const MatrixXd J = point_jacobian(m, q, c, l, s);
        const MatrixXd Jfd = fd_jacobian(
            [&](const VectorXd& x) { return VectorXd(forward_point(m, x, c, l, s)); }, q);
        EXPECT_LT((J - Jfd).norm(), 1e-8);
      }
  }
}

TEST(Kinematics, JacobianIgnoresOtherChains) {
  const RobotModel m = testing::two_chains(2);
  const MatrixXd J = point_jacobian(m, VectorXd::Constant(4, 0.2), 0, 1, 1.0);
  EXPECT_EQ(J.col(2).norm(), 0.0);
  EXPECT_EQ(J.col(3).norm(), 0.0);
}

TEST(Kinematics, HessianMatchesFiniteDifference) {
  const RobotModel m = testing::finger_model();
  std::mt19937_64 rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const VectorXd q = random_vector(rng, 3, -3.0, 3.0);
    const auto H = point_hessian(m, q, 0, 2, 0.8);
    for (int c = 0; c < 2; ++c) {
      const MatrixXd Hfd = fd_jacobian(
          [&](const VectorXd& x) {
            return VectorXd(point_jacobian(m, x, 0, 2, 0.8).row(c).transpose());
          },
          q);
      EXPECT_LT((H[c] - Hfd).norm(), 1e-8);
      EXPECT_LT((H[c] - H[c].transpose()).norm(), 1e-15);
    }
  }
}

TEST(Kinematics, AngularJacobianIsOnesOnPath) {
  const RobotModel m = testing::two_chains(3);
  const Eigen::RowVectorXd w = angular_jacobian(m, 1, 1);
  Eigen::RowVectorXd want = Eigen::RowVectorXd::Zero(6);
  want(3) = want(4) = 1.0;
  EXPECT_EQ((w - want).norm(), 0.0);
}

TEST(Kinematics, RejectsBadArguments) {
  const RobotModel m = testing::finger_model();
  const VectorXd q = VectorXd::Zero(3);
  EXPECT_THROW(forward_point(m, q, 1, 0, 0.5), Error);
  EXPECT_THROW(forward_point(m, q, 0, 3, 0.5), Error);
  EXPECT_THROW(forward_point(m, q, 0, 0, 1.5), Error);
  EXPECT_THROW(forward_point(m, VectorXd::Zero(2), 0, 0, 0.5), Error);
}

}  // namespace
}  // namespace softcoupled
