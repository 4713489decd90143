#include "softcoupled/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numbers>
#include <sstream>

#include <json.hpp>

#include "softcoupled/coupling.hpp"
#include "softcoupled/errors.hpp"
#include "softcoupled/kinematics.hpp"

namespace softcoupled {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kMonotoneTolerance = 1e-8;

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

SegmentRef contact_segment(const ScenarioConfig& cfg) {
  if (cfg.force_pid) return cfg.force_pid->probe.tip;
  const int c = static_cast<int>(cfg.robot.chains.size()) - 1;
  return {c, static_cast<int>(cfg.robot.chains[c].links.size()) - 1};
}

VectorXd wall_generalized_force(const ScenarioConfig& cfg, const State& s) {
  const int n = cfg.robot.dof();
  VectorXd f = VectorXd::Zero(n);
  if (!cfg.contact) return f;
  const double mag = wall_force(cfg, s);
  if (mag == 0.0) return f;
  const SegmentRef seg = contact_segment(cfg);
  const Vector2d normal = cfg.contact->normal.normalized();
  const MatrixXd J = point_jacobian(cfg.robot, s.q, seg.chain, seg.link, 1.0);
  return J.transpose() * (mag * normal);
}

VectorXd disturbance_force(const ScenarioConfig& cfg, double t) {
  VectorXd f = VectorXd::Zero(cfg.robot.dof());
  for (const auto& d : cfg.disturbances)
    if (t >= d.start && t < d.start + d.duration) f[d.coordinate] += d.amplitude;
  return f;
}

VectorXd reference_at(const ScenarioConfig& cfg, const VectorXd& q_bar_a, double t) {
  VectorXd r = q_bar_a;
  if (!cfg.reference || t < cfg.reference->start) return r;
  const auto& ref = *cfg.reference;
  const double v =
      ref.amplitude * std::sin(2.0 * std::numbers::pi * ref.frequency_hz * (t - ref.start));
  if (ref.entries.empty()) {
    r.array() += v;
  } else {
    for (int e : ref.entries) r[e] += v;
  }
  return r;
}

// Angle of the probe coordinate at which the contact point lies on the wall
// line, other coordinates taken from q.
VectorXd contact_posture(const ScenarioConfig& cfg, const VectorXd& q0) {
  const auto& wall = *cfg.contact;
  const Vector2d normal = wall.normal.normalized();
  const SegmentRef seg = contact_segment(cfg);
  const int c = cfg.force_pid->probe.coordinate;
  VectorXd q = q0;
  for (int it = 0; it < 100; ++it) {
    const double g = normal.dot(forward_point(cfg.robot, q, seg.chain, seg.link, 1.0) - wall.point);
    if (std::abs(g) < 1e-14) return q;
    const double dg =
        normal.dot(point_jacobian(cfg.robot, q, seg.chain, seg.link, 1.0).col(c));
    if (std::abs(dg) < 1e-12)
      throw Error(ErrorKind::Singular, "probe link is parallel to the contact normal");
    q[c] -= g / dg;
  }
  const double g = normal.dot(forward_point(cfg.robot, q, seg.chain, seg.link, 1.0) - wall.point);
  if (std::abs(g) > 1e-10) throw SolverError(std::abs(g), "contact posture solve did not converge");
  return q;
}

struct Settling {
  std::optional<double> time;
  bool settled = false;
};

Settling settling_time(const std::vector<double>& t, const std::vector<double>& err) {
  Settling out;
  if (err.empty()) return out;
  const double band = 0.02 * err.front();
  std::ptrdiff_t last_out = -1;
  for (std::size_t i = 0; i < err.size(); ++i)
    if (err[i] > band) last_out = static_cast<std::ptrdiff_t>(i);
  if (last_out + 1 < static_cast<std::ptrdiff_t>(err.size())) {
    out.settled = true;
    out.time = t[static_cast<std::size_t>(last_out + 1)];
  }
  return out;
}

void lyapunov_metrics(const TrajectoryLog& log, MetricsSummary& m) {
  if (log.lyapunov.empty() || !std::isfinite(log.lyapunov.front())) return;
  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 1; i < log.lyapunov.size(); ++i)
    worst = std::max(worst, log.lyapunov[i] - log.lyapunov[i - 1]);
  if (log.lyapunov.size() < 2) worst = 0.0;
  m.max_lyapunov_increase = worst;
  m.lyapunov_monotone = worst <= kMonotoneTolerance;
}

double max_abs_torque(const TrajectoryLog& log) {
  double out = 0.0;
  for (const auto& tau : log.tau)
    if (tau.size() != 0) out = std::max(out, tau.cwiseAbs().maxCoeff());
  return out;
}

// Run a PD regulation (regulate, disturb and certify kinds).
ScenarioResult run_regulation(const ScenarioConfig& cfg) {
  const RobotModel& model = cfg.robot;
  ScenarioResult result;
  RegulatorConfig reg = *cfg.regulator;
  const bool explicit_q_bar_u = reg.q_bar_u.size() != 0;
  if (reg.compensation == Compensation::Feedforward || !explicit_q_bar_u)
    reg = resolve_compensation_point(reg, model);

  std::optional<double> gamma_1 = cfg.gamma_1;
  if (cfg.certify || cfg.kind == ScenarioKind::Certify) {
    result.certificate = certify_scenario(cfg);
    result.ok = result.certificate->verdict;
    if (!gamma_1 && result.certificate->verdict) gamma_1 = result.certificate->gamma_1;
  }

  // Feedforward tracking re-solves the compensation point along the reference.
  const bool moving = cfg.reference.has_value();
  VectorXd warm = reg.q_bar_u;
  auto config_at = [&](double t) {
    if (!moving) return reg;
    RegulatorConfig r = reg;
    r.q_bar_a = reference_at(cfg, reg.q_bar_a, t);
    if (r.compensation == Compensation::Feedforward && !explicit_q_bar_u) {
      r.q_bar_u = equilibrium_solve(model, r.q_bar_a, warm);
      warm = r.q_bar_u;
    }
    return r;
  };

  SimulationHooks hooks;
  hooks.torque = [&](const State& s) { return regulate(config_at(s.t), model, s); };
  hooks.external = [&](const State& s) {
    return VectorXd(disturbance_force(cfg, s.t) + wall_generalized_force(cfg, s));
  };
  if (gamma_1 && !moving && reg.compensation == Compensation::Feedforward && all_linear(model)) {
    const double g1 = *gamma_1;
    hooks.lyapunov = [&, g1](const State& s) { return lyapunov_closed_loop(model, reg, g1, s); };
  }

  State initial = cfg.initial;
  initial.t = 0.0;
  result.log = simulate(model, initial, hooks, cfg.dt, cfg.steps());

  const auto& log = result.log;
  MetricsSummary& m = result.metrics;
  std::vector<double> err(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const VectorXd target = reference_at(cfg, reg.q_bar_a, log.t[i]);
    err[i] = (gather(log.q[i], model.actuated) - target).cwiseAbs().maxCoeff();
  }
  const VectorXd final_err =
      gather(log.q.back(), model.actuated) - reference_at(cfg, reg.q_bar_a, log.t.back());
  m.steady_state_error.assign(final_err.data(), final_err.data() + final_err.size());
  for (auto& e : m.steady_state_error) e = std::abs(e);
  const Settling st = settling_time(log.t, err);
  m.settling_time_2pct = st.time;
  m.settled = st.settled;
  m.max_torque = max_abs_torque(log);
  lyapunov_metrics(log, m);
  for (double tc : cfg.checkpoints) {
    const auto idx = static_cast<std::size_t>(
        std::clamp(std::llround(tc / cfg.dt), 0LL, static_cast<long long>(log.size()) - 1));
    m.checkpoint_errors.push_back(err[idx]);
  }
  if (cfg.contact) m.wall_force = wall_force(cfg, State{log.q.back(), log.q_dot.back(), log.t.back()});
  return result;
}

ScenarioResult run_zero_dynamics(const ScenarioConfig& cfg) {
  const RobotModel& model = cfg.robot;
  const VectorXd q_bar_a = *cfg.zero_dynamics_q_bar_a;
  ScenarioResult result;

  State initial = cfg.initial;
  initial.t = 0.0;
  scatter(initial.q, model.actuated, q_bar_a);

  SimulationHooks hooks;
  const VectorXd zero_tau = VectorXd::Zero(model.num_actuated());
  hooks.torque = [&](const State&) { return zero_tau; };
  hooks.external = [&](const State& s) {
    return VectorXd(disturbance_force(cfg, s.t) + wall_generalized_force(cfg, s));
  };
  hooks.lyapunov = [&](const State& s) { return lyapunov_zero_dynamics(model, q_bar_a, s); };
  hooks.clamped = model.actuated;
  result.log = simulate(model, initial, hooks, cfg.dt, cfg.steps());

  const auto u = model.unactuated();
  const VectorXd q_u_end = gather(result.log.q.back(), u);
  const VectorXd root = equilibrium_solve(model, q_bar_a, q_u_end);
  result.metrics.equilibrium_error = (q_u_end - root).cwiseAbs().maxCoeff();
  result.metrics.max_torque = 0.0;
  lyapunov_metrics(result.log, result.metrics);

  std::vector<double> err(result.log.size());
  for (std::size_t i = 0; i < err.size(); ++i)
    err[i] = (gather(result.log.q[i], u) - root).cwiseAbs().maxCoeff();
  const Settling st = settling_time(result.log.t, err);
  result.metrics.settling_time_2pct = st.time;
  result.metrics.settled = st.settled;
  return result;
}

ScenarioResult run_force_control(const ScenarioConfig& cfg) {
  const RobotModel& model = cfg.robot;
  ForcePidConfig pid = *cfg.force_pid;
  ScenarioResult result;

  if (cfg.force_q_bar) {
    pid.q_bar = *cfg.force_q_bar;
  } else if (pid.F_d == 0.0 && !cfg.contact) {
    pid.q_bar = VectorXd::Zero(model.dof());
  } else {
    const VectorXd posture = contact_posture(cfg, cfg.initial.q);
    const VectorXd q_bar_u = gather(posture, model.unactuated());
    pid.q_bar = solve_force_reference(model, pid.probe, pid.F_d, q_bar_u,
                                      cfg.initial.q[model.actuated[0]]);
  }

  double integral = 0.0;
  SimulationHooks hooks;
  hooks.torque = [&](const State& s) { return force_pid(pid, model, s, integral, 0.0).tau; };
  hooks.external = [&](const State& s) {
    return VectorXd(disturbance_force(cfg, s.t) + wall_generalized_force(cfg, s));
  };
  hooks.after_step = [&](const State& s, double dt) {
    integral = force_pid(pid, model, s, integral, dt).integral;
  };
  State initial = cfg.initial;
  initial.t = 0.0;
  result.log = simulate(model, initial, hooks, cfg.dt, cfg.steps());

  const auto& log = result.log;
  MetricsSummary& m = result.metrics;
  const State last{log.q.back(), log.q_dot.back(), log.t.back()};
  m.max_torque = max_abs_torque(log);
  m.estimated_force = estimate_tip_force(model, pid.probe, last.q);
  if (cfg.contact) m.wall_force = wall_force(cfg, last);
  const double measured = m.wall_force ? *m.wall_force : *m.estimated_force;
  if (pid.F_d != 0.0) m.force_error_pct = 100.0 * std::abs(measured - pid.F_d) / std::abs(pid.F_d);

  std::vector<double> err(log.size());
  for (std::size_t i = 0; i < log.size(); ++i) {
    const double f = cfg.contact ? wall_force(cfg, State{log.q[i], log.q_dot[i], log.t[i]})
                                 : estimate_tip_force(model, pid.probe, log.q[i]);
    err[i] = std::abs(f - pid.F_d);
  }
  const Settling st = settling_time(log.t, err);
  m.settling_time_2pct = st.time;
  m.settled = st.settled;
  return result;
}

std::string regulation_report(const ScenarioConfig& cfg, const ScenarioResult& r) {
  std::ostringstream os;
  os << "scenario: " << to_string(cfg.kind) << "\n";
  os << "samples: " << r.log.size() << "\n";
  const auto& m = r.metrics;
  if (!m.steady_state_error.empty()) {
    os << "steady_state_error:";
    for (double e : m.steady_state_error) os << " " << fmt(e);
    os << "\n";
  }
  os << "settling_time_2pct: " << (m.settled ? fmt(*m.settling_time_2pct) : "not settled") << "\n";
  os << "max_torque: " << fmt(m.max_torque) << "\n";
  if (m.lyapunov_monotone)
    os << "lyapunov_monotone: " << (*m.lyapunov_monotone ? "true" : "false")
       << " (max increase " << fmt(m.max_lyapunov_increase) << ")\n";
  if (m.equilibrium_error) os << "equilibrium_error: " << fmt(*m.equilibrium_error) << "\n";
  if (m.wall_force) os << "wall_force: " << fmt(*m.wall_force) << "\n";
  if (m.estimated_force) os << "estimated_force: " << fmt(*m.estimated_force) << "\n";
  if (m.force_error_pct) os << "force_error_pct: " << fmt(*m.force_error_pct) << "\n";
  for (std::size_t i = 0; i < m.checkpoint_errors.size(); ++i)
    os << "checkpoint t=" << fmt(cfg.checkpoints[i]) << " error: " << fmt(m.checkpoint_errors[i])
       << "\n";
  if (r.certificate) os << certificate_report(*r.certificate);
  return os.str();
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(cell);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

}  // namespace

double wall_force(const ScenarioConfig& cfg, const State& s) {
  if (!cfg.contact) return 0.0;
  const auto& wall = *cfg.contact;
  const SegmentRef seg = contact_segment(cfg);
  const Vector2d normal = wall.normal.normalized();
  const Vector2d p = forward_point(cfg.robot, s.q, seg.chain, seg.link, 1.0);
  const double pen = -normal.dot(p - wall.point);
  if (pen <= 0.0) return 0.0;
  const Vector2d v = point_jacobian(cfg.robot, s.q, seg.chain, seg.link, 1.0) * s.q_dot;
  const double pen_rate = -normal.dot(v);
  return std::max(0.0, wall.stiffness * pen + wall.damping * pen_rate);
}

GainCertificate certify_scenario(const ScenarioConfig& cfg) {
  if (!cfg.regulator) throw Error(ErrorKind::Argument, "certify needs a regulator controller");
  const CertifySettings settings = cfg.certify ? *cfg.certify : CertifySettings{};
  const ConfigRegion region =
      settings.region ? *settings.region : ConfigRegion::full(cfg.robot.dof());
  const RegulatorConfig reg = resolve_compensation_point(*cfg.regulator, cfg.robot);
  return certify_gains(cfg.robot, reg, region, settings.options);
}

std::vector<FitResult> identify_scenario(const ScenarioConfig& cfg) {
  if (!cfg.identify) throw Error(ErrorKind::Argument, "scenario has no identify block");
  const IdentifyConfig& ic = *cfg.identify;
  const std::vector<IdSample> data =
      ic.dataset_path.empty()
          ? generate_synthetic_dataset(cfg.robot, ic.setup, ic.true_family, ic.k_true,
                                       ic.protocol, cfg.seed)
          : read_dataset_csv(ic.dataset_path);
  if (!ic.dataset_output.empty()) write_dataset_csv(data, ic.dataset_output);
  std::vector<FitResult> fits;
  for (auto family : ic.families) fits.push_back(fit_stiffness(family, cfg.robot, ic.setup, data));
  return fits;
}

ScenarioResult run_scenario(const ScenarioConfig& cfg) {
  validate_config(cfg);
  ScenarioResult result;
  switch (cfg.kind) {
    case ScenarioKind::Regulate:
    case ScenarioKind::Disturb:
    case ScenarioKind::Certify:
      result = run_regulation(cfg);
      break;
    case ScenarioKind::ZeroDynamics:
      result = run_zero_dynamics(cfg);
      break;
    case ScenarioKind::ForceControl:
      result = run_force_control(cfg);
      break;
    case ScenarioKind::Identify: {
      result.fits = identify_scenario(cfg);
      result.log.n = cfg.robot.dof();
      result.log.m = cfg.robot.num_actuated();
      std::ostringstream os;
      os << "scenario: identify\n" << fits_csv(result.fits);
      result.report = os.str();
      if (!cfg.output_path.empty()) {
        std::ofstream out(cfg.output_path, std::ios::binary);
        if (!out) throw Error(ErrorKind::Io, "cannot write '" + cfg.output_path + "'");
        out << fits_csv(result.fits);
        if (!out) throw Error(ErrorKind::Io, "write failed for '" + cfg.output_path + "'");
      }
      return result;
    }
  }
  result.report = regulation_report(cfg, result);
  if (!cfg.output_path.empty()) export_csv(result.log, cfg.output_path);
  return result;
}

std::string format_csv(const TrajectoryLog& log) {
  std::string out = "t";
  for (int i = 1; i <= log.n; ++i) out += ",q_" + std::to_string(i);
  for (int i = 1; i <= log.n; ++i) out += ",qd_" + std::to_string(i);
  for (int i = 1; i <= log.m; ++i) out += ",tau_" + std::to_string(i);
  out += ",E_kin,E_elastic,E_grav,V_lyap\n";
  for (std::size_t r = 0; r < log.size(); ++r) {
    out += fmt(log.t[r]);
    for (int i = 0; i < log.n; ++i) out += "," + fmt(log.q[r][i]);
    for (int i = 0; i < log.n; ++i) out += "," + fmt(log.q_dot[r][i]);
    for (int i = 0; i < log.m; ++i) out += "," + fmt(log.tau[r][i]);
    out += "," + fmt(log.kinetic[r]) + "," + fmt(log.elastic[r]) + "," +
           fmt(log.gravitational[r]) + "," + fmt(log.lyapunov[r]) + "\n";
  }
  return out;
}

void export_csv(const TrajectoryLog& log, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write '" + path + "'");
  out << format_csv(log);
  out.flush();
  if (!out) throw Error(ErrorKind::Io, "write failed for '" + path + "'");
}

TrajectoryLog read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorKind::Parse, path + ": missing header");
  const auto header = split(line);
  TrajectoryLog log;
  for (const auto& h : header) {
    if (h.rfind("q_", 0) == 0) ++log.n;
    if (h.rfind("tau_", 0) == 0) ++log.m;
  }
  const std::size_t cols = 1 + 2 * static_cast<std::size_t>(log.n) + log.m + 4;
  if (header.size() != cols || header.front() != "t")
    throw Error(ErrorKind::Parse, path + ": unexpected header");
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    const auto cells = split(line);
    if (cells.size() != cols)
      throw Error(ErrorKind::Parse, path + ":" + std::to_string(row) + ": wrong column count");
    std::vector<double> v(cols);
    for (std::size_t i = 0; i < cols; ++i) {
      char* end = nullptr;
      v[i] = std::strtod(cells[i].c_str(), &end);
      if (end == cells[i].c_str() || *end != '\0')
        throw Error(ErrorKind::Parse, path + ":" + std::to_string(row) + ": bad number '" +
                                          cells[i] + "'");
    }
    std::size_t k = 0;
    log.t.push_back(v[k++]);
    VectorXd q(log.n), qd(log.n), tau(log.m);
    for (int i = 0; i < log.n; ++i) q[i] = v[k++];
    for (int i = 0; i < log.n; ++i) qd[i] = v[k++];
    for (int i = 0; i < log.m; ++i) tau[i] = v[k++];
    log.q.push_back(q);
    log.q_dot.push_back(qd);
    log.tau.push_back(tau);
    log.kinetic.push_back(v[k++]);
    log.elastic.push_back(v[k++]);
    log.gravitational.push_back(v[k++]);
    log.lyapunov.push_back(v[k++]);
  }
  return log;
}

std::string metrics_to_json(const MetricsSummary& m) {
  using nlohmann::json;
  auto o = [](const std::optional<double>& v) { return v ? json(*v) : json(nullptr); };
  json j;
  j["steady_state_error"] = m.steady_state_error;
  j["settling_time_2pct"] = o(m.settling_time_2pct);
  j["settled"] = m.settled;
  j["max_torque"] = m.max_torque;
  j["lyapunov_monotone"] = m.lyapunov_monotone ? json(*m.lyapunov_monotone) : json(nullptr);
  j["max_lyapunov_increase"] = m.lyapunov_monotone ? json(m.max_lyapunov_increase) : json(nullptr);
  j["force_error_pct"] = o(m.force_error_pct);
  j["wall_force"] = o(m.wall_force);
  j["estimated_force"] = o(m.estimated_force);
  j["equilibrium_error"] = o(m.equilibrium_error);
  j["checkpoint_errors"] = m.checkpoint_errors;
  return j.dump(2) + "\n";
}

std::string certificate_report(const GainCertificate& c) {
  std::ostringstream os;
  const auto& b = c.bounds;
  os << "gamma_C: " << fmt(b.gamma_C) << "\n"
     << "lambda_min_M: " << fmt(b.lambda_min_M) << "\n"
     << "lambda_max_M: " << fmt(b.lambda_max_M) << "\n"
     << "gamma_UG: " << fmt(b.gamma_UG) << "\n"
     << "gamma_G: " << fmt(b.gamma_G) << "\n"
     << "gamma_dG: " << fmt(b.gamma_dG) << "\n"
     << "grid: " << b.grid_density << " per axis, " << b.samples << " samples, inflation "
     << fmt(b.inflation) << "\n"
     << "alpha_G: " << fmt(c.alpha_G) << "\n"
     << "alpha_UG: " << fmt(c.alpha_UG) << "\n"
     << "alpha_dG: " << fmt(c.alpha_dG) << "\n"
     << "alpha_GK: " << fmt(c.alpha_GK) << "\n"
     << "norm_K_au: " << fmt(c.norm_K_au) << "\n"
     << "norm_q_bar_u: " << fmt(c.norm_q_bar_u) << "\n"
     << "lambda_min_Dhat: " << fmt(c.lambda_min_Dhat) << "\n"
     << "sigma_max_Dhat_a: " << fmt(c.sigma_max_Dhat_a) << "\n"
     << "gamma_1_lower: " << fmt(c.gamma_1_lower) << "\n"
     << "gamma_1: " << fmt(c.gamma_1) << "\n"
     << "gamma_2: " << fmt(c.gamma_2) << "\n"
     << "Q11: " << fmt(c.Q(0, 0)) << "\n"
     << "Q12: " << fmt(c.Q(0, 1)) << "\n"
     << "Q22: " << fmt(c.Q(1, 1)) << "\n"
     << "det_Q: " << fmt(c.det_Q) << "\n"
     << "lambda_min_KP_Kaa: " << fmt(c.lambda_min_KP_Kaa) << "\n"
     << "kp_lower_bound: " << fmt(c.kp_lower_bound) << "\n"
     << "verdict: " << (c.verdict ? "PASS" : "FAIL") << "\n";
  if (!c.verdict) os << "failed condition: " << c.failure << "\n";
  return os.str();
}

std::string fits_csv(const std::vector<FitResult>& fits) {
  std::string out = "family,k_hat,r_squared,n_samples\n";
  for (const auto& f : fits)
    out += std::string(to_string(f.family)) + "," + fmt(f.k_hat) + "," + fmt(f.r_squared) + "," +
           std::to_string(f.n_samples) + "\n";
  return out;
}

}  // namespace softcoupled
