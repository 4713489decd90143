#include "softcoupled/kinematics.hpp"

#include <cmath>
#include <string>

#include "softcoupled/errors.hpp"

namespace softcoupled {
namespace {

Vector2d perp(const Vector2d& v) { return {-v.y(), v.x()}; }

void check_args(const RobotModel& model, const VectorXd& q, int chain,
                int link, double s) {
  if (chain < 0 || chain >= static_cast<int>(model.chains.size()))
    throw Error(ErrorKind::Argument, "chain index " + std::to_string(chain) +
                                         " out of range");
  const int nlinks = static_cast<int>(model.chains[chain].links.size());
  if (link < 0 || link >= nlinks)
    throw Error(ErrorKind::Argument, "link index " + std::to_string(link) +
                                         " out of range for chain " +
                                         std::to_string(chain));
  if (!(s >= 0.0 && s <= 1.0))
    throw Error(ErrorKind::Argument, "arc-length fraction s must lie in [0, 1]");
  if (q.size() != model.dof())
    throw Error(ErrorKind::Argument, "configuration has wrong dimension");
}

// Joint origins o_0..o_link and the requested point.
struct ChainWalk {
  std::vector<Vector2d> origins;
  Vector2d point;
  int offset;
};

ChainWalk walk(const RobotModel& model, const VectorXd& q, int chain, int link,
               double s) {
  const auto& c = model.chains[chain];
  ChainWalk w;
  w.offset = model.chain_offset(chain);
  w.origins.reserve(link + 1);
  Vector2d o = c.base_anchor;
  double theta = 0.0;
  for (int k = 0; k <= link; ++k) {
    theta += q[w.offset + k];
    w.origins.push_back(o);
    const Vector2d dir(std::cos(theta), std::sin(theta));
    if (k == link) {
      w.point = o + s * c.links[k].length * dir;
    } else {
      o += c.links[k].length * dir;
    }
  }
  return w;
}

}  // namespace

Vector2d forward_point(const RobotModel& model, const VectorXd& q, int chain,
                       int link, double s) {
  check_args(model, q, chain, link, s);
  return walk(model, q, chain, link, s).point;
}

Vector2d joint_position(const RobotModel& model, const VectorXd& q, int chain,
                        int link) {
  check_args(model, q, chain, link, 0.0);
  return walk(model, q, chain, link, 0.0).point;
}

MatrixXd point_jacobian(const RobotModel& model, const VectorXd& q, int chain,
                        int link, double s) {
  check_args(model, q, chain, link, s);
  const ChainWalk w = walk(model, q, chain, link, s);
  MatrixXd J = MatrixXd::Zero(2, model.dof());
  for (int j = 0; j <= link; ++j)
    J.col(w.offset + j) = perp(w.point - w.origins[j]);
  return J;
}

std::array<MatrixXd, 2> point_hessian(const RobotModel& model,
                                      const VectorXd& q, int chain, int link,
                                      double s) {
  check_args(model, q, chain, link, s);
  const ChainWalk w = walk(model, q, chain, link, s);
  const int n = model.dof();
  std::array<MatrixXd, 2> H{MatrixXd::Zero(n, n), MatrixXd::Zero(n, n)};
  // d/dq_k perp(p - o_j) = -(p - o_max(j,k))
  for (int j = 0; j <= link; ++j) {
    for (int k = 0; k <= link; ++k) {
      const Vector2d r = -(w.point - w.origins[std::max(j, k)]);
      H[0](w.offset + j, w.offset + k) = r.x();
      H[1](w.offset + j, w.offset + k) = r.y();
    }
  }
  return H;
}

Eigen::RowVectorXd angular_jacobian(const RobotModel& model, int chain,
                                    int link) {
  Eigen::RowVectorXd Jw = Eigen::RowVectorXd::Zero(model.dof());
  const int off = model.chain_offset(chain);
  for (int j = 0; j <= link; ++j) Jw[off + j] = 1.0;
  return Jw;
}

double link_angle(const RobotModel& model, const VectorXd& q, int chain,
                  int link) {
  const int off = model.chain_offset(chain);
  double theta = 0.0;
  for (int j = 0; j <= link; ++j) theta += q[off + j];
  return theta;
}

}  // namespace softcoupled
