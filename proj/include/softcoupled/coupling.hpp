#pragma once

#include "softcoupled/model.hpp"

namespace softcoupled {

/// Elastic energy stored in one coupling (J).
double coupling_energy(const CouplingSpec& spec, const RobotModel& model,
                       const VectorXd& q);

/// Generalized force dU/dq of one coupling. It enters the equations of motion
/// on the left-hand side, next to gravity.
VectorXd coupling_force(const CouplingSpec& spec, const RobotModel& model,
                        const VectorXd& q);

/// Symmetric n x n stiffness d^2U/dq^2 of one coupling.
MatrixXd coupling_stiffness(const CouplingSpec& spec, const RobotModel& model,
                            const VectorXd& q);

/// Throws Error(Argument) when a spec does not fit the model.
void validate_coupling(const CouplingSpec& spec, const RobotModel& model);

/// Sum of decoupled joint springs and all couplings, with its
/// actuated/unactuated partition.
struct ElasticTerms {
  double energy = 0.0;
  VectorXd force;      // F_K
  MatrixXd stiffness;  // dF_K/dq
  VectorXd force_a, force_u;
  MatrixXd K_aa, K_au, K_ua, K_uu;
};

ElasticTerms assemble_total_elastic(const RobotModel& model,
                                    const VectorXd& q);

/// Elastic energy of springs and couplings only.
double elastic_energy(const RobotModel& model, const VectorXd& q);
/// F_K without the stiffness matrix, for use inside integrator stages.
VectorXd elastic_force(const RobotModel& model, const VectorXd& q);

/// True when every coupling is of the Linear family.
bool all_linear(const RobotModel& model);

/// Gauss-Legendre nodes and weights mapped to [0, 1].
struct QuadratureRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
const QuadratureRule& gauss_legendre_unit(int points);

}  // namespace softcoupled
