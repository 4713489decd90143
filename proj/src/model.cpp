#include "softcoupled/model.hpp"

#include <algorithm>
#include <cctype>
#include <sstream>

#include "softcoupled/coupling.hpp"
#include "softcoupled/errors.hpp"

namespace softcoupled {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Argument: return "argument error";
    case ErrorKind::DegenerateGeometry: return "degenerate geometry";
    case ErrorKind::IllConditioned: return "ill-conditioned";
    case ErrorKind::Divergence: return "divergence";
    case ErrorKind::SolverNonConvergence: return "solver did not converge";
    case ErrorKind::Singular: return "singular";
    case ErrorKind::UnsupportedFamily: return "unsupported coupling family";
    case ErrorKind::DegenerateDataset: return "degenerate dataset";
    case ErrorKind::Parse: return "parse error";
    case ErrorKind::Io: return "I/O error";
    case ErrorKind::CertificateFailed: return "certificate failed";
  }
  return "unknown error";
}

LinkGeometry LinkGeometry::uniform_rod(double length, double mass) {
  return LinkGeometry{length, mass, 0.5 * length, mass * length * length / 12.0};
}

const char* to_string(CouplingFamily family) noexcept {
  switch (family) {
    case CouplingFamily::Linear: return "linear";
    case CouplingFamily::Distance: return "distance";
    case CouplingFamily::Rejection: return "rejection";
    case CouplingFamily::NeoHookean: return "neo_hookean";
  }
  return "unknown";
}

CouplingFamily coupling_family_from_string(const std::string& name) {
  std::string n = name;
  std::transform(n.begin(), n.end(), n.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  if (n == "linear") return CouplingFamily::Linear;
  if (n == "distance") return CouplingFamily::Distance;
  if (n == "rejection") return CouplingFamily::Rejection;
  if (n == "neo_hookean" || n == "neohookean" || n == "neo-hookean")
    return CouplingFamily::NeoHookean;
  throw Error(ErrorKind::Argument, "unknown coupling family '" + name + "'");
}

int RobotModel::dof() const {
  int n = 0;
  for (const auto& c : chains) n += static_cast<int>(c.links.size());
  return n;
}

std::vector<int> RobotModel::unactuated() const {
  std::vector<int> out;
  const int n = dof();
  for (int i = 0; i < n; ++i)
    if (std::find(actuated.begin(), actuated.end(), i) == actuated.end())
      out.push_back(i);
  return out;
}

int RobotModel::chain_offset(int chain) const {
  int off = 0;
  for (int c = 0; c < chain; ++c) off += static_cast<int>(chains[c].links.size());
  return off;
}

SegmentRef RobotModel::coordinate_owner(int coord) const {
  int off = 0;
  for (int c = 0; c < static_cast<int>(chains.size()); ++c) {
    const int len = static_cast<int>(chains[c].links.size());
    if (coord < off + len) return {c, coord - off};
    off += len;
  }
  throw Error(ErrorKind::Argument,
              "coordinate " + std::to_string(coord) + " out of range");
}

MatrixXd RobotModel::actuation_map() const {
  if (actuation.size() != 0) return actuation;
  MatrixXd a = MatrixXd::Zero(dof(), num_actuated());
  for (int j = 0; j < num_actuated(); ++j) a(actuated[j], j) = 1.0;
  return a;
}

MatrixXd RobotModel::damping_matrix() const {
  return joint_damping.asDiagonal();
}

void RobotModel::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::Argument, msg); };
  if (chains.empty()) fail("robot has no chains");
  for (std::size_t c = 0; c < chains.size(); ++c) {
    if (chains[c].links.empty())
      fail("chain " + std::to_string(c) + " has no links");
    for (std::size_t l = 0; l < chains[c].links.size(); ++l) {
      const auto& g = chains[c].links[l];
      const std::string where =
          "chains[" + std::to_string(c) + "].links[" + std::to_string(l) + "].";
      if (!(g.length > 0)) fail(where + "length must be > 0");
      if (!(g.mass > 0)) fail(where + "mass must be > 0");
      if (!(g.inertia_about_com >= 0)) fail(where + "inertia_about_com must be >= 0");
      if (!(g.com_offset >= 0 && g.com_offset <= g.length))
        fail(where + "com_offset must lie in [0, length]");
    }
  }
  const int n = dof();
  const int m = num_actuated();
  if (m < 1 || m > n) fail("actuated: need 1 <= m <= n");
  std::vector<int> sorted = actuated;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end())
    fail("actuated: duplicate index");
  if (sorted.front() < 0 || sorted.back() >= n) fail("actuated: index out of range");
  if (actuation.size() != 0) {
    if (actuation.rows() != n || actuation.cols() != m)
      fail("actuation: must be n x m");
    Eigen::FullPivLU<MatrixXd> lu(actuation);
    if (lu.rank() != m) fail("actuation: must have full column rank");
  }
  if (joint_stiffness.size() != n) fail("joint_stiffness: need one value per joint");
  if (joint_damping.size() != n) fail("joint_damping: need one value per joint");
  for (int i = 0; i < n; ++i) {
    if (!(joint_stiffness[i] >= 0)) fail("joint_stiffness: must be >= 0");
    if (!(joint_damping[i] > 0))
      fail("joint_damping: must be > 0 (D positive definite)");
  }
  if (!gravity.allFinite()) fail("gravity: must be finite");
  for (const auto& spec : couplings) validate_coupling(spec, *this);
}

VectorXd gather(const VectorXd& v, const std::vector<int>& idx) {
  VectorXd out(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) out[i] = v[idx[i]];
  return out;
}

MatrixXd gather(const MatrixXd& m, const std::vector<int>& rows,
                const std::vector<int>& cols) {
  MatrixXd out(rows.size(), cols.size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < cols.size(); ++j) out(i, j) = m(rows[i], cols[j]);
  return out;
}

void scatter(VectorXd& v, const std::vector<int>& idx, const VectorXd& values) {
  for (std::size_t i = 0; i < idx.size(); ++i) v[idx[i]] = values[i];
}

}  // namespace softcoupled
