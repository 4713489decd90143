#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "softcoupled/coupling.hpp"
#include "softcoupled/errors.hpp"
#include "test_models.hpp"

namespace softcoupled {
namespace {

using testing::fd_gradient;
using testing::fd_jacobian;
using testing::random_vector;
using testing::rel_error;

CouplingSpec coordinate_spec(CouplingFamily f, double k, int i, int j) {
  CouplingSpec s;
  s.family = f;
  s.k = k;
  s.coord_i = i;
  s.coord_j = j;
  return s;
}

CouplingSpec segment_spec(CouplingFamily f, double k, SegmentRef a, SegmentRef b) {
  CouplingSpec s;
  s.family = f;
  s.k = k;
  s.segment_a = a;
  s.segment_b = b;
  return s;
}

RobotModel two_links() {
  RobotModel m = testing::two_chains(1);
  return m;
}

TEST(Coupling, LinearEnergyAndForceExamples) {
  const RobotModel m = two_links();
  const CouplingSpec s = coordinate_spec(CouplingFamily::Linear, 2.0, 0, 1);
  VectorXd q(2);
  q << 1.0, 0.0;
  EXPECT_DOUBLE_EQ(coupling_energy(s, m, q), 1.0);
  const VectorXd f = coupling_force(s, m, q);
  EXPECT_DOUBLE_EQ(f[0], 2.0);
  EXPECT_DOUBLE_EQ(f[1], -2.0);
  q << 0.4, 0.4;
  EXPECT_EQ(coupling_energy(s, m, q), 0.0);
  EXPECT_EQ(coupling_force(s, m, q).norm(), 0.0);
  const MatrixXd K = coupling_stiffness(s, m, q);
  EXPECT_EQ(K, (MatrixXd(2, 2) << 2, -2, -2, 2).finished());
}

TEST(Coupling, NeoHookeanRelaxedAndQuadratic) {
  const RobotModel m = two_links();
  const CouplingSpec s = coordinate_spec(CouplingFamily::NeoHookean, 3.0, 0, 1);
  VectorXd q(2);
  q << 0.7, 0.7;
  EXPECT_NEAR(coupling_energy(s, m, q), 0.0, 1e-15);
  // lambda^2 + lambda^-2 - 2 equals gamma^2 for the simple-shear stretch.
  for (double gamma : {-1.3, -0.2, 0.05, 0.9, 2.5}) {
    q << gamma, 0.0;
    const double lambda = (gamma + std::sqrt(gamma * gamma + 4.0)) / 2.0;
    const double direct = 3.0 * (lambda * lambda + 1.0 / (lambda * lambda) - 2.0);
    EXPECT_NEAR(coupling_energy(s, m, q), direct, 1e-12);
    EXPECT_NEAR(direct, 3.0 * gamma * gamma, 1e-12);
  }
}

TEST(Coupling, DistanceZeroForCoincidentSegments) {
  const RobotModel m = two_links();
  const CouplingSpec s = segment_spec(CouplingFamily::Distance, 5.0, {0, 0}, {1, 0});
  RobotModel same = m;
  same.chains[1].links[0] = same.chains[0].links[0];
  EXPECT_NEAR(coupling_energy(s, same, VectorXd::Constant(2, 0.9)), 0.0, 1e-15);
}

TEST(Coupling, DistanceEnergyClosedForm) {
  // Two unit links from the origin at angles 0 and delta: |a(s) - b(s)|^2 =
  // s^2 (2 - 2 cos delta); the integral over [0, 1] is (2 - 2 cos delta) / 3.
  RobotModel m = two_links();
  m.chains[0].links[0].length = 1.0;
  m.chains[1].links[0].length = 1.0;
  const CouplingSpec s = segment_spec(CouplingFamily::Distance, 1.5, {0, 0}, {1, 0});
  VectorXd q(2);
  q << 0.0, 0.8;
  EXPECT_NEAR(coupling_energy(s, m, q), 1.5 * (2.0 - 2.0 * std::cos(0.8)) / 3.0, 1e-14);
}

TEST(Coupling, RejectionEnergyClosedForm) {
  // Rejection of each unit link from the other: 2 s^2 sin^2 delta; integral 2 sin^2 delta / 3.
  RobotModel m = two_links();
  m.chains[0].links[0].length = 1.0;
  m.chains[1].links[0].length = 1.0;
  const CouplingSpec s = segment_spec(CouplingFamily::Rejection, 0.5, {0, 0}, {1, 0});
  VectorXd q(2);
  q << 0.3, 1.0;
  const double sn = std::sin(0.7);
  EXPECT_NEAR(coupling_energy(s, m, q), 0.5 * 2.0 * sn * sn / 3.0, 1e-14);
}

TEST(Coupling, RejectionDegenerateGeometryThrows) {
  RobotModel m = testing::two_chains(2);
  m.chains[0].links[1].length = 1e-12;
  m.chains[0].links[0].length = 1e-12;
  const CouplingSpec s = segment_spec(CouplingFamily::Rejection, 1.0, {0, 1}, {1, 1});
  try {
    coupling_energy(s, m, VectorXd::Constant(4, 0.1));
    FAIL() << "expected a degenerate-geometry error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateGeometry);
  }
}

struct FamilyCase {
  CouplingSpec spec;
  const char* name;
};

std::vector<FamilyCase> all_families() {
  return {
      {coordinate_spec(CouplingFamily::Linear, 2.0, 1, 3), "linear"},
      {coordinate_spec(CouplingFamily::NeoHookean, 1.3, 1, 3), "neo_hookean"},
      {segment_spec(CouplingFamily::Distance, 4.0, {0, 1}, {1, 1}), "distance"},
      {segment_spec(CouplingFamily::Rejection, 3.0, {0, 1}, {1, 1}), "rejection"},
  };
}

TEST(Coupling, ForceIsEnergyGradientAndStiffnessIsForceJacobian) {
  const RobotModel m = testing::two_chains(2, 0.15);
  std::mt19937_64 rng(11);
  for (const auto& fc : all_families()) {
    double worst_force = 0.0, worst_stiff = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
      const VectorXd q = random_vector(rng, 4, -2.5, 2.5);
      const VectorXd F = coupling_force(fc.spec, m, q);
      const VectorXd Ffd =
          fd_gradient([&](const VectorXd& x) { return coupling_energy(fc.spec, m, x); }, q);
      const MatrixXd K = coupling_stiffness(fc.spec, m, q);
      const MatrixXd Kfd =
          fd_jacobian([&](const VectorXd& x) { return coupling_force(fc.spec, m, x); }, q);
      worst_force = std::max(worst_force, rel_error(F, Ffd));
      worst_stiff = std::max(worst_stiff, rel_error(K, Kfd));
      EXPECT_LT((K - K.transpose()).norm(), 1e-12) << fc.name;
      EXPECT_GE(coupling_energy(fc.spec, m, q), 0.0) << fc.name;
    }
    EXPECT_LT(worst_force, 1e-5) << fc.name;
    EXPECT_LT(worst_stiff, 1e-4) << fc.name;
  }
}

TEST(Coupling, EnergySymmetricUnderSwap) {
  const RobotModel m = testing::two_chains(2, 0.15);
  std::mt19937_64 rng(2);
  for (auto fc : all_families()) {
    CouplingSpec swapped = fc.spec;
    std::swap(swapped.coord_i, swapped.coord_j);
    std::swap(swapped.segment_a, swapped.segment_b);
    for (int t = 0; t < 10; ++t) {
      const VectorXd q = random_vector(rng, 4, -2.0, 2.0);
      EXPECT_NEAR(coupling_energy(fc.spec, m, q), coupling_energy(swapped, m, q), 1e-12)
          << fc.name;
    }
  }
}

TEST(Coupling, QuadratureConvergence) {
  const RobotModel m = testing::two_chains(2, 0.15);
  std::mt19937_64 rng(8);
  for (auto family : {CouplingFamily::Distance, CouplingFamily::Rejection}) {
    CouplingSpec s20 = segment_spec(family, 1.0, {0, 1}, {1, 1});
    CouplingSpec s40 = s20;
    s40.quadrature_points = 40;
    for (int t = 0; t < 10; ++t) {
      const VectorXd q = random_vector(rng, 4, -1.0, 1.0);
      const double e20 = coupling_energy(s20, m, q), e40 = coupling_energy(s40, m, q);
      EXPECT_LT(std::abs(e20 - e40), 1e-6 * std::max(std::abs(e40), 1e-12));
    }
  }
}

TEST(Coupling, QuadratureRuleIntegratesPolynomials) {
  const QuadratureRule& rule = gauss_legendre_unit(5);
  ASSERT_EQ(rule.nodes.size(), 5u);
  for (int p = 0; p <= 9; ++p) {
    double sum = 0.0;
    for (std::size_t i = 0; i < rule.nodes.size(); ++i) sum += rule.weights[i] * std::pow(rule.nodes[i], p);
    EXPECT_NEAR(sum, 1.0 / (p + 1), 1e-14) << "degree " << p;
  }
  for (double x : rule.nodes) {
    EXPECT_GT(x, 0.0);
    EXPECT_LT(x, 1.0);
  }
}

TEST(Coupling, FingerAssembledStiffness) {
  const RobotModel m = testing::finger_model();
  const ElasticTerms t = assemble_total_elastic(m, VectorXd::Zero(3));
  MatrixXd want = 1.5 * MatrixXd::Identity(3, 3);
  want.block(1, 1, 2, 2) += (MatrixXd(2, 2) << 2, -2, -2, 2).finished();
  EXPECT_LT((t.stiffness - want).norm(), 1e-15);
  ASSERT_EQ(t.K_uu.rows(), 1);
  EXPECT_DOUBLE_EQ(t.K_uu(0, 0), 3.5);
  EXPECT_DOUBLE_EQ(t.K_ua(0, 0), 0.0);
  EXPECT_DOUBLE_EQ(t.K_ua(0, 1), -2.0);
  EXPECT_LT((t.K_au - t.K_ua.transpose()).norm(), 1e-15);
}

TEST(Coupling, DecoupledModelHasDiagonalStiffness) {
  RobotModel m = testing::finger_model();
  m.couplings.clear();
  const ElasticTerms t = assemble_total_elastic(m, VectorXd::Constant(3, 0.3));
  EXPECT_LT((t.stiffness - 1.5 * MatrixXd::Identity(3, 3)).norm(), 1e-15);
  EXPECT_EQ(t.K_au.norm(), 0.0);
}

TEST(Coupling, LinearElasticForceIsKq) {
  const RobotModel m = testing::finger_model();
  std::mt19937_64 rng(4);
  const MatrixXd K = assemble_total_elastic(m, VectorXd::Zero(3)).stiffness;
  for (int t = 0; t < 20; ++t) {
    const VectorXd q = random_vector(rng, 3, -3.0, 3.0);
    EXPECT_LT((elastic_force(m, q) - K * q).norm(), 1e-13);
    EXPECT_NEAR(elastic_energy(m, q), 0.5 * q.dot(K * q), 1e-13);
  }
}

TEST(Coupling, SmallStrainNeoHookeanMatchesLinear) {
  // Same small-strain stiffness: Linear with k against NeoHookean with k / 2.
  const RobotModel m = two_links();
  const CouplingSpec lin = coordinate_spec(CouplingFamily::Linear, 2.0, 0, 1);
  const CouplingSpec neo = coordinate_spec(CouplingFamily::NeoHookean, 1.0, 0, 1);
  for (double d = -0.099; d < 0.1; d += 0.011) {
    VectorXd q(2);
    q << 0.2 + d, 0.2;
    const VectorXd fl = coupling_force(lin, m, q), fn = coupling_force(neo, m, q);
    if (std::abs(d) > 1e-12) EXPECT_LT(std::abs(fn[0] - fl[0]) / std::abs(fl[0]), 0.01);
  }
}

TEST(Coupling, ValidationRejectsBadSpecs) {
  const RobotModel m = two_links();
  EXPECT_THROW(validate_coupling(coordinate_spec(CouplingFamily::Linear, -1.0, 0, 1), m), Error);
  EXPECT_THROW(validate_coupling(coordinate_spec(CouplingFamily::Linear, 1.0, 0, 0), m), Error);
  EXPECT_THROW(validate_coupling(coordinate_spec(CouplingFamily::Linear, 1.0, 0, 2), m), Error);
  EXPECT_THROW(validate_coupling(segment_spec(CouplingFamily::Distance, 1.0, {0, 0}, {0, 0}), m),
               Error);
  EXPECT_THROW(validate_coupling(segment_spec(CouplingFamily::Distance, 1.0, {0, 0}, {2, 0}), m),
               Error);
  CouplingSpec q0 = segment_spec(CouplingFamily::Rejection, 1.0, {0, 0}, {1, 0});
  q0.quadrature_points = 0;
  EXPECT_THROW(validate_coupling(q0, m), Error);
}

}  // namespace
}  // namespace softcoupled
