#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "softcoupled/control.hpp"
#include "softcoupled/dynamics.hpp"
#include "softcoupled/identification.hpp"
#include "softcoupled/model.hpp"

namespace softcoupled {

enum class ScenarioKind { Regulate, ZeroDynamics, Disturb, ForceControl, Identify, Certify };

const char* to_string(ScenarioKind kind) noexcept;

/// Time-varying set point: q_bar_a(t) = q_bar_a + amplitude sin(2 pi f (t - start))
/// for t >= start, on the listed actuated entries (all when empty).
struct SinusoidReference {
  double amplitude = 0.0;
  double frequency_hz = 0.0;
  double start = 0.0;
  std::vector<int> entries;
};

/// Torque pulse of `amplitude` on `coordinate` during [start, start + duration).
struct Disturbance {
  int coordinate = 0;
  double amplitude = 0.0;
  double start = 0.0;
  double duration = 0.0;
};

/// Unilateral spring-damper wall. `normal` points into the free side.
struct ContactWall {
  Vector2d point = Vector2d::Zero();
  Vector2d normal{0.0, 1.0};
  double stiffness = 1e3;  // N/m
  double damping = 10.0;   // N s/m
};

struct IdentifyConfig {
  IdentificationSetup setup;
  std::vector<CouplingFamily> families{CouplingFamily::Linear, CouplingFamily::Distance,
                                       CouplingFamily::Rejection, CouplingFamily::NeoHookean};
  /// Measured dataset; when empty a synthetic one is generated.
  std::string dataset_path;
  CouplingFamily true_family = CouplingFamily::Linear;
  double k_true = 1.0;
  SyntheticProtocol protocol;
  /// Optional path where the dataset used for the fit is written.
  std::string dataset_output;
};

struct CertifySettings {
  std::optional<ConfigRegion> region;  // default [-pi, pi]^n
  CertifyOptions options;
};

struct ScenarioConfig {
  ScenarioKind kind = ScenarioKind::Regulate;
  RobotModel robot;
  std::optional<RegulatorConfig> regulator;
  std::optional<SinusoidReference> reference;
  std::optional<double> gamma_1;
  std::optional<ForcePidConfig> force_pid;
  /// Contact posture of the probed link for force control; derived from the
  /// wall when absent.
  std::optional<VectorXd> force_q_bar;
  std::optional<VectorXd> zero_dynamics_q_bar_a;
  double duration = 10.0;
  double dt = 1e-3;
  State initial;
  std::vector<Disturbance> disturbances;
  std::optional<ContactWall> contact;
  std::optional<IdentifyConfig> identify;
  std::optional<CertifySettings> certify;
  std::vector<double> checkpoints;
  std::uint64_t seed = 0;
  std::string output_path;

  std::size_t steps() const;
};

/// Parse and validate a scenario file. Errors are Error(Parse) whose message
/// names the file and either the line/column of a syntax error or the JSON
/// path of the offending field.
ScenarioConfig parse_config(const std::string& path);
ScenarioConfig parse_config_text(const std::string& text, const std::string& origin = "<text>");

/// Serialize back to the scenario schema; parse_config_text(emit_config(c))
/// reproduces c.
std::string emit_config(const ScenarioConfig& config);

/// Re-run the invariant checks done at parse time (after overrides).
void validate_config(const ScenarioConfig& config);

struct MetricsSummary {
  std::vector<double> steady_state_error;  // per actuated coordinate, rad
  std::optional<double> settling_time_2pct;
  bool settled = false;
  double max_torque = 0.0;
  std::optional<bool> lyapunov_monotone;
  double max_lyapunov_increase = 0.0;
  std::optional<double> force_error_pct;
  std::optional<double> wall_force;
  std::optional<double> estimated_force;
  std::optional<double> equilibrium_error;
  std::vector<double> checkpoint_errors;
};

struct ScenarioResult {
  TrajectoryLog log;
  MetricsSummary metrics;
  std::optional<GainCertificate> certificate;
  std::vector<FitResult> fits;
  /// Human-readable summary.
  std::string report;
  /// False when a certificate was requested and failed.
  bool ok = true;
};

/// Run a scenario and, when output_path is set, write its CSV.
ScenarioResult run_scenario(const ScenarioConfig& config);

/// Gain certificate for the regulator of a scenario.
GainCertificate certify_scenario(const ScenarioConfig& config);

/// Identification fits of an identify scenario.
std::vector<FitResult> identify_scenario(const ScenarioConfig& config);

/// Contact force of the wall on the probe tip, N (zero without contact).
double wall_force(const ScenarioConfig& config, const State& state);

/// CSV header t,q_1..q_n,qd_1..qd_n,tau_1..tau_m,E_kin,E_elastic,E_grav,V_lyap
/// and one row per sample at 17 significant digits.
void export_csv(const TrajectoryLog& log, const std::string& path);
std::string format_csv(const TrajectoryLog& log);
TrajectoryLog read_csv(const std::string& path);

std::string metrics_to_json(const MetricsSummary& metrics);
std::string certificate_report(const GainCertificate& cert);
std::string fits_csv(const std::vector<FitResult>& fits);

}  // namespace softcoupled
