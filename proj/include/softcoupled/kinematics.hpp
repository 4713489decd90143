#pragma once

#include <array>

#include "softcoupled/model.hpp"

namespace softcoupled {

/// World-frame position of the point at fraction s in [0, 1] along a link.
Vector2d forward_point(const RobotModel& model, const VectorXd& q, int chain,
                       int link, double s);

/// World-frame position of the joint at the root of a link.
Vector2d joint_position(const RobotModel& model, const VectorXd& q, int chain,
                        int link);

/// 2 x n Jacobian of forward_point. Columns of joints that are not on the
/// path from the base to the point are zero.
MatrixXd point_jacobian(const RobotModel& model, const VectorXd& q, int chain,
                        int link, double s);

/// Second derivatives of forward_point: element c is the n x n Hessian of
/// coordinate c (x or y) of the point.
std::array<MatrixXd, 2> point_hessian(const RobotModel& model,
                                      const VectorXd& q, int chain, int link,
                                      double s);

/// 1 x n angular-velocity Jacobian of a link (absolute angle rate).
Eigen::RowVectorXd angular_jacobian(const RobotModel& model, int chain,
                                    int link);

/// Absolute orientation of a link.
double link_angle(const RobotModel& model, const VectorXd& q, int chain,
                  int link);

}  // namespace softcoupled
