#include "softcoupled/coupling.hpp"

#include <gsl/gsl_integration.h>

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <string>

#include "softcoupled/errors.hpp"
#include "softcoupled/kinematics.hpp"

namespace softcoupled {
namespace {

constexpr double kDegenerateRadius = 1e-9;

using Vector4d = Eigen::Vector4d;
using Matrix4d = Eigen::Matrix4d;

// Integrand of an integral family, as a function of the two material points
// a = p_a(s), b = p_b(s), with its gradient and Hessian in (a, b).
struct PointPairTerm {
  double value = 0.0;
  Vector4d grad = Vector4d::Zero();
  Matrix4d hess = Matrix4d::Zero();
};

PointPairTerm distance_term(const Vector2d& a, const Vector2d& b) {
  PointPairTerm t;
  const Vector2d d = a - b;
  t.value = d.squaredNorm();
  t.grad << 2.0 * d, -2.0 * d;
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  t.hess.topLeftCorner<2, 2>() = 2.0 * I;
  t.hess.bottomRightCorner<2, 2>() = 2.0 * I;
  t.hess.topRightCorner<2, 2>() = -2.0 * I;
  t.hess.bottomLeftCorner<2, 2>() = -2.0 * I;
  return t;
}

void check_not_degenerate(const Vector2d& a, const Vector2d& b) {
  if (a.norm() < kDegenerateRadius || b.norm() < kDegenerateRadius)
    throw Error(ErrorKind::DegenerateGeometry,
                "rejection coupling: sample point coincides with the origin");
}

// |r_1|^2 + |r_2|^2 evaluated from the vector rejections themselves.
double rejection_value(const Vector2d& a, const Vector2d& b) {
  check_not_degenerate(a, b);
  const Vector2d r1 = a - (a.dot(b) / b.dot(b)) * b;
  const Vector2d r2 = b - (a.dot(b) / a.dot(a)) * a;
  return r1.squaredNorm() + r2.squaredNorm();
}

// In the plane |r_1|^2 = c^2/|b|^2 and |r_2|^2 = c^2/|a|^2 with c = a x b,
// which gives closed-form derivatives.
PointPairTerm rejection_term(const Vector2d& a, const Vector2d& b) {
  check_not_degenerate(a, b);
  PointPairTerm t;
  const double A = a.squaredNorm();
  const double B = b.squaredNorm();
  const double c = a.x() * b.y() - a.y() * b.x();
  const double w = 1.0 / A + 1.0 / B;
  t.value = c * c * w;

  Vector4d dc;
  dc << b.y(), -b.x(), -a.y(), a.x();
  Matrix4d Hc = Matrix4d::Zero();
  Hc(0, 3) = Hc(3, 0) = 1.0;
  Hc(1, 2) = Hc(2, 1) = -1.0;

  Vector4d dw;
  dw << -2.0 * a / (A * A), -2.0 * b / (B * B);
  Matrix4d Hw = Matrix4d::Zero();
  const Eigen::Matrix2d I = Eigen::Matrix2d::Identity();
  Hw.topLeftCorner<2, 2>() = -2.0 * I / (A * A) + 8.0 * a * a.transpose() / (A * A * A);
  Hw.bottomRightCorner<2, 2>() =
      -2.0 * I / (B * B) + 8.0 * b * b.transpose() / (B * B * B);

  t.grad = 2.0 * c * w * dc + c * c * dw;
  t.hess = 2.0 * w * dc * dc.transpose() + 2.0 * c * w * Hc +
           2.0 * c * (dc * dw.transpose() + dw * dc.transpose()) + c * c * Hw;
  return t;
}

struct IntegralResult {
  double energy = 0.0;
  VectorXd force;
  MatrixXd stiffness;
};

enum class Order { Energy, Force, Stiffness };

IntegralResult integrate_pair(const CouplingSpec& spec, const RobotModel& model,
                              const VectorXd& q, Order order) {
  const int n = model.dof();
  const auto& rule = gauss_legendre_unit(spec.quadrature_points);
  const auto [ca, la] = spec.segment_a;
  const auto [cb, lb] = spec.segment_b;
  const bool rejection = spec.family == CouplingFamily::Rejection;

  IntegralResult out;
  if (order != Order::Energy) out.force = VectorXd::Zero(n);
  if (order == Order::Stiffness) out.stiffness = MatrixXd::Zero(n, n);

  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    const double s = rule.nodes[i];
    const double wq = rule.weights[i];
    const Vector2d a = forward_point(model, q, ca, la, s);
    const Vector2d b = forward_point(model, q, cb, lb, s);
    if (order == Order::Energy) {
      out.energy += wq * (rejection ? rejection_value(a, b) : (a - b).squaredNorm());
      continue;
    }
    const PointPairTerm t = rejection ? rejection_term(a, b) : distance_term(a, b);
    out.energy += wq * t.value;
    MatrixXd J(4, n);
    J.topRows(2) = point_jacobian(model, q, ca, la, s);
    J.bottomRows(2) = point_jacobian(model, q, cb, lb, s);
    out.force += wq * (J.transpose() * t.grad);
    if (order == Order::Stiffness) {
      MatrixXd H = J.transpose() * t.hess * J;
      const auto Ha = point_hessian(model, q, ca, la, s);
      const auto Hb = point_hessian(model, q, cb, lb, s);
      for (int c = 0; c < 2; ++c) H += t.grad[c] * Ha[c] + t.grad[2 + c] * Hb[c];
      out.stiffness += wq * H;
    }
  }
  out.energy *= spec.k;
  if (order != Order::Energy) out.force *= spec.k;
  if (order == Order::Stiffness) {
    out.stiffness *= spec.k;
    out.stiffness = 0.5 * (out.stiffness + out.stiffness.transpose()).eval();
  }
  return out;
}

// Principal stretch of simple shear with amount gamma and its derivatives.
struct ShearStretch {
  double lambda, d1, d2;
};

ShearStretch shear_stretch(double gamma) {
  const double root = std::sqrt(gamma * gamma + 4.0);
  return {0.5 * (gamma + root), 0.5 * (1.0 + gamma / root),
          2.0 / (root * root * root)};
}

}  // namespace

const QuadratureRule& gauss_legendre_unit(int points) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<QuadratureRule>> cache;
  if (points < 1)
    throw Error(ErrorKind::Argument, "quadrature_points must be positive");
  std::lock_guard<std::mutex> lock(mutex);
  auto& slot = cache[points];
  if (!slot) {
    auto rule = std::make_unique<QuadratureRule>();
    gsl_integration_glfixed_table* table =
        gsl_integration_glfixed_table_alloc(static_cast<size_t>(points));
    for (int i = 0; i < points; ++i) {
      double x = 0.0, w = 0.0;
      gsl_integration_glfixed_point(0.0, 1.0, static_cast<size_t>(i), &x, &w, table);
      rule->nodes.push_back(x);
      rule->weights.push_back(w);
    }
    gsl_integration_glfixed_table_free(table);
    slot = std::move(rule);
  }
  return *slot;
}

void validate_coupling(const CouplingSpec& spec, const RobotModel& model) {
  auto fail = [](const std::string& msg) {
    throw Error(ErrorKind::Argument, "coupling: " + msg);
  };
  if (!(spec.k >= 0.0)) fail("k must be >= 0");
  const int n = model.dof();
  switch (spec.family) {
    case CouplingFamily::Linear:
    case CouplingFamily::NeoHookean:
      if (spec.coord_i < 0 || spec.coord_i >= n || spec.coord_j < 0 ||
          spec.coord_j >= n)
        fail("coordinate index out of range");
      if (spec.coord_i == spec.coord_j) fail("coordinates must be distinct");
      break;
    case CouplingFamily::Distance:
    case CouplingFamily::Rejection: {
      for (const SegmentRef& r : {spec.segment_a, spec.segment_b}) {
        if (r.chain < 0 || r.chain >= static_cast<int>(model.chains.size()) ||
            r.link < 0 ||
            r.link >= static_cast<int>(model.chains[r.chain].links.size()))
          fail("segment reference out of range");
      }
      if (spec.segment_a.chain == spec.segment_b.chain &&
          spec.segment_a.link == spec.segment_b.link)
        fail("segments must be distinct");
      if (spec.quadrature_points < 1) fail("quadrature_points must be positive");
      break;
    }
  }
}

double coupling_energy(const CouplingSpec& spec, const RobotModel& model,
                       const VectorXd& q) {
  switch (spec.family) {
    case CouplingFamily::Linear: {
      const double d = q[spec.coord_i] - q[spec.coord_j];
      return 0.5 * spec.k * d * d;
    }
    case CouplingFamily::NeoHookean: {
      const double lambda = shear_stretch(q[spec.coord_i] - q[spec.coord_j]).lambda;
      return spec.k * (lambda * lambda + 1.0 / (lambda * lambda) - 2.0);
    }
    case CouplingFamily::Distance:
    case CouplingFamily::Rejection:
      return integrate_pair(spec, model, q, Order::Energy).energy;
  }
  return 0.0;
}

VectorXd coupling_force(const CouplingSpec& spec, const RobotModel& model,
                        const VectorXd& q) {
  const int n = model.dof();
  switch (spec.family) {
    case CouplingFamily::Linear: {
      VectorXd f = VectorXd::Zero(n);
      const double t = spec.k * (q[spec.coord_i] - q[spec.coord_j]);
      f[spec.coord_i] = t;
      f[spec.coord_j] = -t;
      return f;
    }
    case CouplingFamily::NeoHookean: {
      // dU/dgamma = dU/dlambda * dlambda/dgamma
      const ShearStretch st = shear_stretch(q[spec.coord_i] - q[spec.coord_j]);
      const double l = st.lambda;
      const double t = 2.0 * spec.k * (l - 1.0 / (l * l * l)) * st.d1;
      VectorXd f = VectorXd::Zero(n);
      f[spec.coord_i] = t;
      f[spec.coord_j] = -t;
      return f;
    }
    case CouplingFamily::Distance:
    case CouplingFamily::Rejection:
      return integrate_pair(spec, model, q, Order::Force).force;
  }
  return VectorXd::Zero(n);
}

MatrixXd coupling_stiffness(const CouplingSpec& spec, const RobotModel& model,
                            const VectorXd& q) {
  const int n = model.dof();
  auto pair_matrix = [&](double kk) {
    MatrixXd K = MatrixXd::Zero(n, n);
    K(spec.coord_i, spec.coord_i) = kk;
    K(spec.coord_j, spec.coord_j) = kk;
    K(spec.coord_i, spec.coord_j) = -kk;
    K(spec.coord_j, spec.coord_i) = -kk;
    return K;
  };
  switch (spec.family) {
    case CouplingFamily::Linear:
      return pair_matrix(spec.k);
    case CouplingFamily::NeoHookean: {
      const ShearStretch st = shear_stretch(q[spec.coord_i] - q[spec.coord_j]);
      const double l = st.lambda;
      const double dU = 2.0 * spec.k * (l - 1.0 / (l * l * l));
      const double d2U = 2.0 * spec.k * (1.0 + 3.0 / (l * l * l * l));
      return pair_matrix(d2U * st.d1 * st.d1 + dU * st.d2);
    }
    case CouplingFamily::Distance:
    case CouplingFamily::Rejection:
      return integrate_pair(spec, model, q, Order::Stiffness).stiffness;
  }
  return MatrixXd::Zero(n, n);
}

ElasticTerms assemble_total_elastic(const RobotModel& model, const VectorXd& q) {
  ElasticTerms e;
  const VectorXd& kd = model.joint_stiffness;
  e.energy = 0.5 * q.dot(kd.cwiseProduct(q));
  e.force = kd.cwiseProduct(q);
  e.stiffness = kd.asDiagonal();
  for (const auto& spec : model.couplings) {
    e.energy += coupling_energy(spec, model, q);
    e.force += coupling_force(spec, model, q);
    e.stiffness += coupling_stiffness(spec, model, q);
  }
  const auto a = model.actuated;
  const auto u = model.unactuated();
  e.force_a = gather(e.force, a);
  e.force_u = gather(e.force, u);
  e.K_aa = gather(e.stiffness, a, a);
  e.K_au = gather(e.stiffness, a, u);
  e.K_ua = gather(e.stiffness, u, a);
  e.K_uu = gather(e.stiffness, u, u);
  return e;
}

double elastic_energy(const RobotModel& model, const VectorXd& q) {
  double u = 0.5 * q.dot(model.joint_stiffness.cwiseProduct(q));
  for (const auto& spec : model.couplings) u += coupling_energy(spec, model, q);
  return u;
}

VectorXd elastic_force(const RobotModel& model, const VectorXd& q) {
  VectorXd f = model.joint_stiffness.cwiseProduct(q);
  for (const auto& spec : model.couplings) f += coupling_force(spec, model, q);
  return f;
}

bool all_linear(const RobotModel& model) {
  for (const auto& spec : model.couplings)
    if (spec.family != CouplingFamily::Linear) return false;
  return true;
}

}  // namespace softcoupled
