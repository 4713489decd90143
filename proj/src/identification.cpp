#include "softcoupled/identification.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <random>
#include <sstream>

#include "softcoupled/coupling.hpp"
#include "softcoupled/dynamics.hpp"
#include "softcoupled/errors.hpp"

namespace softcoupled {

CouplingSpec IdentificationSetup::unit_spec(CouplingFamily family) const {
  CouplingSpec spec;
  spec.family = family;
  spec.k = 1.0;
  spec.coord_i = coord_i;
  spec.coord_j = coord_j;
  spec.segment_a = segment_a;
  spec.segment_b = segment_b;
  spec.quadrature_points = quadrature_points;
  return spec;
}

double regressor(CouplingFamily family, const RobotModel& model,
                 const IdentificationSetup& setup, const VectorXd& q) {
  if (setup.observed < 0 || setup.observed >= model.dof())
    throw Error(ErrorKind::Argument, "observed coordinate out of range");
  return coupling_force(setup.unit_spec(family), model, q)[setup.observed];
}

FitResult fit_stiffness(CouplingFamily family, const RobotModel& model,
                        const IdentificationSetup& setup,
                        const std::vector<IdSample>& dataset) {
  if (dataset.size() < 2)
    throw Error(ErrorKind::DegenerateDataset, "need at least two samples");
  std::vector<double> phi(dataset.size());
  double sxy = 0.0, sxx = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    phi[i] = regressor(family, model, setup, dataset[i].q);
    sxy += phi[i] * dataset[i].tau_measured;
    sxx += phi[i] * phi[i];
    mean += dataset[i].tau_measured;
  }
  if (!(sxx > 0.0))
    throw Error(ErrorKind::DegenerateDataset, "all regressors are zero");
  mean /= static_cast<double>(dataset.size());

  FitResult fit;
  fit.family = family;
  fit.n_samples = dataset.size();
  fit.k_hat = sxy / sxx;
  fit.negative_stiffness = fit.k_hat < 0.0;
  double ss_res = 0.0, ss_tot = 0.0;
  fit.residuals.reserve(dataset.size());
  for (std::size_t i = 0; i < dataset.size(); ++i) {
    const double r = dataset[i].tau_measured - fit.k_hat * phi[i];
    fit.residuals.push_back(r);
    ss_res += r * r;
    const double d = dataset[i].tau_measured - mean;
    ss_tot += d * d;
  }
  fit.r_squared = ss_tot > 0.0 ? 1.0 - ss_res / ss_tot : (ss_res == 0.0 ? 1.0 : 0.0);
  return fit;
}

namespace {

// Observed coordinate free: its spring and gravity balance the coupling.
double settle_free_coordinate(const RobotModel& model, const CouplingSpec& spec,
                              int observed, VectorXd q) {
  const double kd = model.joint_stiffness[observed];
  auto residual = [&](const VectorXd& x) {
    return coupling_force(spec, model, x)[observed] + kd * x[observed] +
           gravity_vector(model, x)[observed];
  };
  double r = residual(q);
  for (int it = 0; it < 100 && std::abs(r) > 1e-13; ++it) {
    const double slope = coupling_stiffness(spec, model, q)(observed, observed) + kd +
                         gravity_jacobian(model, q)(observed, observed);
    if (std::abs(slope) < 1e-14) break;
    const double dx = -r / slope;
    double step = 1.0;
    bool moved = false;
    for (int h = 0; h < 40; ++h, step *= 0.5) {
      VectorXd trial = q;
      trial[observed] += step * dx;
      const double rt = residual(trial);
      if (std::abs(rt) < std::abs(r)) {
        q = trial;
        r = rt;
        moved = true;
        break;
      }
    }
    if (!moved) break;
  }
  if (!(std::abs(r) < 1e-9))
    throw SolverError(std::abs(r), "free-link settling did not converge");
  return q[observed];
}

}  // namespace

std::vector<IdSample> generate_synthetic_dataset(const RobotModel& model,
                                                 const IdentificationSetup& setup,
                                                 CouplingFamily family, double k_true,
                                                 const SyntheticProtocol& protocol,
                                                 std::uint64_t seed) {
  if (protocol.noise_std < 0.0 || protocol.noise_fraction < 0.0)
    throw Error(ErrorKind::Argument, "noise must be >= 0");
  if (protocol.actuated_count < 1)
    throw Error(ErrorKind::Argument, "actuated_count must be >= 1");
  if (model.num_actuated() != 1)
    throw Error(ErrorKind::Argument, "synthetic protocol drives exactly one actuated joint");
  const int n = model.dof();
  const int ia = model.actuated[0];
  const int obs = setup.observed;
  CouplingSpec truth = setup.unit_spec(family);
  truth.k = k_true;

  std::vector<IdSample> data;
  for (int i = 0; i < protocol.actuated_count; ++i) {
    const double qa =
        protocol.actuated_count == 1
            ? protocol.actuated_min
            : protocol.actuated_min + (protocol.actuated_max - protocol.actuated_min) * i /
                                          (protocol.actuated_count - 1);
    for (double held : protocol.held_angles) {
      IdSample s;
      s.q = VectorXd::Zero(n);
      s.q[ia] = qa;
      s.q[obs] = held;
      s.held.assign(n, false);
      s.held[obs] = true;
      data.push_back(std::move(s));
    }
    if (protocol.include_free) {
      IdSample s;
      s.q = VectorXd::Zero(n);
      s.q[ia] = qa;
      s.q[obs] = qa;
      s.q[obs] = settle_free_coordinate(model, truth, obs, s.q);
      s.held.assign(n, false);
      data.push_back(std::move(s));
    }
  }

  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (auto& s : data) {
    s.tau_measured = k_true * regressor(family, model, setup, s.q);
    lo = std::min(lo, s.tau_measured);
    hi = std::max(hi, s.tau_measured);
  }
  const double sigma = protocol.noise_std + protocol.noise_fraction * (hi - lo);
  if (sigma > 0.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> noise(0.0, sigma);
    for (auto& s : data) s.tau_measured += noise(rng);
  }
  return data;
}

void write_dataset_csv(const std::vector<IdSample>& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open '" + path + "' for writing");
  const int n = data.empty() ? 0 : static_cast<int>(data.front().q.size());
  for (int i = 0; i < n; ++i) out << "q_" << i + 1 << ',';
  out << "tau";
  for (int i = 0; i < n; ++i) out << ",held_" << i + 1;
  out << '\n';
  char buf[32];
  for (const auto& s : data) {
    for (int i = 0; i < n; ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", s.q[i]);
      out << buf << ',';
    }
    std::snprintf(buf, sizeof buf, "%.17g", s.tau_measured);
    out << buf;
    for (int i = 0; i < n; ++i) out << ',' << (s.held[i] ? 1 : 0);
    out << '\n';
  }
  if (!out) throw Error(ErrorKind::Io, "write to '" + path + "' failed");
}

std::vector<IdSample> read_dataset_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, path + ": empty dataset file");
  const auto columns = std::count(line.begin(), line.end(), ',') + 1;
  if (columns < 3 || (columns - 1) % 2 != 0)
    throw Error(ErrorKind::Parse, path + ":1: header must be q_1..q_n,tau,held_1..held_n");
  const int n = static_cast<int>((columns - 1) / 2);

  std::vector<IdSample> data;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<double> v;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      char* end = nullptr;
      const double x = std::strtod(cell.c_str(), &end);
      if (end == cell.c_str())
        throw Error(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": bad number '" + cell + "'");
      v.push_back(x);
    }
    if (static_cast<long>(v.size()) != columns)
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": expected " +
                                        std::to_string(columns) + " columns");
    IdSample s;
    s.q = Eigen::Map<VectorXd>(v.data(), n);
    s.tau_measured = v[n];
    for (int i = 0; i < n; ++i) s.held.push_back(v[n + 1 + i] != 0.0);
    if (!s.q.allFinite() || !std::isfinite(s.tau_measured))
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(lineno) + ": non-finite value");
    data.push_back(std::move(s));
  }
  return data;
}

}  // namespace softcoupled
