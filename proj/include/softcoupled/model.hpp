#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace softcoupled {

using Eigen::MatrixXd;
using Eigen::Vector2d;
using Eigen::VectorXd;

/// Rigid link of a planar serial chain.
struct LinkGeometry {
  double length = 1.0;             // m
  double mass = 0.1;               // kg
  double com_offset = 0.5;         // m along the link from its joint
  double inertia_about_com = 0.0;  // kg m^2

  /// Uniform thin rod: COM at mid-length, I = m l^2 / 12.
  static LinkGeometry uniform_rod(double length, double mass);
};

/// Serial chain of revolute joints rooted at a fixed base point. Joint angles
/// are relative to the parent link; the first one is measured from +x.
struct Chain {
  Vector2d base_anchor = Vector2d::Zero();
  std::vector<LinkGeometry> links;
};

enum class CouplingFamily { Linear, Distance, Rejection, NeoHookean };

const char* to_string(CouplingFamily family) noexcept;
CouplingFamily coupling_family_from_string(const std::string& name);

/// Reference to one link of one chain.
struct SegmentRef {
  int chain = 0;
  int link = 0;
};

/// One elastic coupling. Linear and NeoHookean act on a pair of generalized
/// coordinates; Distance and Rejection act on a pair of segments.
///
/// Units of k: N m/rad for Linear, N m for NeoHookean (energy scale), and
/// N/m for the integral families since their integrand is a squared length.
struct CouplingSpec {
  CouplingFamily family = CouplingFamily::Linear;
  double k = 0.0;
  int coord_i = 0;
  int coord_j = 1;
  SegmentRef segment_a{};
  SegmentRef segment_b{};
  int quadrature_points = 20;
};

/// Planar soft-rigid robot: parallel serial chains, decoupled joint springs
/// and dampers, elastic couplings, and an actuation map.
struct RobotModel {
  std::vector<Chain> chains;
  std::vector<int> actuated;          // indices of q_a in q
  MatrixXd actuation;                 // n x m; empty means selection columns
  VectorXd joint_stiffness;           // k_d per joint
  VectorXd joint_damping;             // d per joint (diagonal D)
  std::vector<CouplingSpec> couplings;
  Vector2d gravity{0.0, -9.81};

  int dof() const;
  int num_actuated() const { return static_cast<int>(actuated.size()); }
  /// Unactuated indices in increasing order.
  std::vector<int> unactuated() const;
  /// Global index of the first joint of chain c.
  int chain_offset(int chain) const;
  /// Chain and link index owning generalized coordinate i.
  SegmentRef coordinate_owner(int coord) const;
  /// The n x m actuation map (selection columns when not set explicitly).
  MatrixXd actuation_map() const;
  MatrixXd damping_matrix() const;

  /// Throws Error(Argument) naming the first violated invariant.
  void validate() const;
};

/// Configuration and velocity at time t.
struct State {
  VectorXd q;
  VectorXd q_dot;
  double t = 0.0;
};

/// Gather the entries of v at the given indices.
VectorXd gather(const VectorXd& v, const std::vector<int>& idx);
MatrixXd gather(const MatrixXd& m, const std::vector<int>& rows,
                const std::vector<int>& cols);
void scatter(VectorXd& v, const std::vector<int>& idx, const VectorXd& values);

}  // namespace softcoupled
