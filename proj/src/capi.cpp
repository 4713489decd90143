#include "softcoupled/softcoupled.h"

#include <cstring>
#include <exception>
#include <new>
#include <string>

#include "softcoupled/control.hpp"
#include "softcoupled/coupling.hpp"
#include "softcoupled/dynamics.hpp"
#include "softcoupled/errors.hpp"
#include "softcoupled/scenario.hpp"

using namespace softcoupled;

struct sc_scenario {
  ScenarioConfig config;
};

struct sc_result {
  ScenarioResult result;
  std::string metrics_json;
};

struct sc_model {
  RobotModel model;
};

namespace {

thread_local std::string g_last_error;
thread_local long long g_divergence_step = -1;

sc_status status_of(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Argument: return SC_ERR_ARGUMENT;
    case ErrorKind::DegenerateGeometry: return SC_ERR_DEGENERATE_GEOMETRY;
    case ErrorKind::IllConditioned: return SC_ERR_ILL_CONDITIONED;
    case ErrorKind::Divergence: return SC_ERR_DIVERGENCE;
    case ErrorKind::SolverNonConvergence: return SC_ERR_SOLVER;
    case ErrorKind::Singular: return SC_ERR_SINGULAR;
    case ErrorKind::UnsupportedFamily: return SC_ERR_UNSUPPORTED_FAMILY;
    case ErrorKind::DegenerateDataset: return SC_ERR_DEGENERATE_DATASET;
    case ErrorKind::Parse: return SC_ERR_PARSE;
    case ErrorKind::Io: return SC_ERR_IO;
    case ErrorKind::CertificateFailed: return SC_ERR_CERTIFICATE;
  }
  return SC_ERR_INTERNAL;
}

template <class F>
sc_status guarded(F&& f) {
  g_last_error.clear();
  g_divergence_step = -1;
  try {
    f();
    return SC_OK;
  } catch (const DivergenceError& e) {
    g_last_error = e.what();
    g_divergence_step = static_cast<long long>(e.step());
    return SC_ERR_DIVERGENCE;
  } catch (const Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return SC_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return SC_ERR_INTERNAL;
  }
}

sc_status null_argument(const char* name) {
  g_last_error = std::string("null argument: ") + name;
  return SC_ERR_ARGUMENT;
}

char* duplicate(const std::string& s) {
  char* out = new char[s.size() + 1];
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

}  // namespace

extern "C" {

const char* sc_version(void) { return "0.1.0"; }

const char* sc_status_name(sc_status status) {
  switch (status) {
    case SC_OK: return "ok";
    case SC_ERR_ARGUMENT: return "argument";
    case SC_ERR_PARSE: return "parse";
    case SC_ERR_IO: return "io";
    case SC_ERR_DIVERGENCE: return "divergence";
    case SC_ERR_ILL_CONDITIONED: return "ill_conditioned";
    case SC_ERR_SOLVER: return "solver_non_convergence";
    case SC_ERR_SINGULAR: return "singular";
    case SC_ERR_DEGENERATE_GEOMETRY: return "degenerate_geometry";
    case SC_ERR_UNSUPPORTED_FAMILY: return "unsupported_family";
    case SC_ERR_DEGENERATE_DATASET: return "degenerate_dataset";
    case SC_ERR_CERTIFICATE: return "certificate_failed";
    case SC_ERR_INTERNAL: return "internal";
  }
  return "unknown";
}

const char* sc_last_error(void) { return g_last_error.c_str(); }

long long sc_last_divergence_step(void) { return g_divergence_step; }

void sc_string_free(char* s) { delete[] s; }

sc_status sc_scenario_load(const char* path, sc_scenario** out) {
  if (!path) return null_argument("path");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new sc_scenario{parse_config(path)}; });
}

sc_status sc_scenario_parse(const char* text, const char* origin, sc_scenario** out) {
  if (!text) return null_argument("text");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    *out = new sc_scenario{parse_config_text(text, origin ? origin : "<text>")};
  });
}

void sc_scenario_free(sc_scenario* scenario) { delete scenario; }

sc_status sc_scenario_set_dt(sc_scenario* scenario, double dt) {
  if (!scenario) return null_argument("scenario");
  return guarded([&] {
    ScenarioConfig c = scenario->config;
    c.dt = dt;
    validate_config(c);
    scenario->config = std::move(c);
  });
}

sc_status sc_scenario_set_duration(sc_scenario* scenario, double duration) {
  if (!scenario) return null_argument("scenario");
  return guarded([&] {
    ScenarioConfig c = scenario->config;
    c.duration = duration;
    validate_config(c);
    scenario->config = std::move(c);
  });
}

sc_status sc_scenario_set_output(sc_scenario* scenario, const char* path) {
  if (!scenario) return null_argument("scenario");
  if (!path) return null_argument("path");
  return guarded([&] { scenario->config.output_path = path; });
}

sc_status sc_scenario_set_seed(sc_scenario* scenario, uint64_t seed) {
  if (!scenario) return null_argument("scenario");
  return guarded([&] { scenario->config.seed = seed; });
}

sc_status sc_scenario_validate(const sc_scenario* scenario) {
  if (!scenario) return null_argument("scenario");
  return guarded([&] { validate_config(scenario->config); });
}

sc_status sc_scenario_emit(const sc_scenario* scenario, char** out) {
  if (!scenario) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = duplicate(emit_config(scenario->config)); });
}

const char* sc_scenario_kind(const sc_scenario* scenario) {
  return scenario ? to_string(scenario->config.kind) : "";
}

const char* sc_scenario_output(const sc_scenario* scenario) {
  return scenario ? scenario->config.output_path.c_str() : "";
}

sc_status sc_run(const sc_scenario* scenario, sc_result** out) {
  if (!scenario) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] {
    auto* r = new sc_result{run_scenario(scenario->config), {}};
    r->metrics_json = metrics_to_json(r->result.metrics);
    *out = r;
  });
}

void sc_result_free(sc_result* result) { delete result; }

int sc_result_ok(const sc_result* result) { return result && result->result.ok ? 1 : 0; }

const char* sc_result_report(const sc_result* result) {
  return result ? result->result.report.c_str() : "";
}

const char* sc_result_metrics_json(const sc_result* result) {
  return result ? result->metrics_json.c_str() : "";
}

size_t sc_result_rows(const sc_result* result) { return result ? result->result.log.size() : 0; }

sc_status sc_result_write_csv(const sc_result* result, const char* path) {
  if (!result) return null_argument("result");
  if (!path) return null_argument("path");
  return guarded([&] { export_csv(result->result.log, path); });
}

sc_status sc_certify(const sc_scenario* scenario, char** report, int* verdict) {
  if (!scenario) return null_argument("scenario");
  if (!report) return null_argument("report");
  if (!verdict) return null_argument("verdict");
  *report = nullptr;
  *verdict = 0;
  return guarded([&] {
    const GainCertificate cert = certify_scenario(scenario->config);
    *report = duplicate(certificate_report(cert));
    *verdict = cert.verdict ? 1 : 0;
  });
}

sc_status sc_identify(const sc_scenario* scenario, char** fits) {
  if (!scenario) return null_argument("scenario");
  if (!fits) return null_argument("fits_csv");
  *fits = nullptr;
  return guarded([&] { *fits = duplicate(fits_csv(identify_scenario(scenario->config))); });
}

sc_status sc_model_from_scenario(const sc_scenario* scenario, sc_model** out) {
  if (!scenario) return null_argument("scenario");
  if (!out) return null_argument("out");
  *out = nullptr;
  return guarded([&] { *out = new sc_model{scenario->config.robot}; });
}

void sc_model_free(sc_model* model) { delete model; }

int sc_model_dof(const sc_model* model) { return model ? model->model.dof() : 0; }

int sc_model_num_actuated(const sc_model* model) {
  return model ? model->model.num_actuated() : 0;
}

sc_status sc_model_mass_matrix(const sc_model* model, const double* q, double* out) {
  if (!model || !q || !out) return null_argument("model, q or out");
  return guarded([&] {
    const int n = model->model.dof();
    const MatrixXd M = mass_matrix(model->model, Eigen::Map<const VectorXd>(q, n));
    Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(out, n, n) = M;
  });
}

sc_status sc_model_gravity(const sc_model* model, const double* q, double* out) {
  if (!model || !q || !out) return null_argument("model, q or out");
  return guarded([&] {
    const int n = model->model.dof();
    Eigen::Map<VectorXd>(out, n) = gravity_vector(model->model, Eigen::Map<const VectorXd>(q, n));
  });
}

sc_status sc_model_elastic_force(const sc_model* model, const double* q, double* out) {
  if (!model || !q || !out) return null_argument("model, q or out");
  return guarded([&] {
    const int n = model->model.dof();
    Eigen::Map<VectorXd>(out, n) = elastic_force(model->model, Eigen::Map<const VectorXd>(q, n));
  });
}

sc_status sc_model_elastic_energy(const sc_model* model, const double* q, double* out) {
  if (!model || !q || !out) return null_argument("model, q or out");
  return guarded([&] {
    *out = elastic_energy(model->model, Eigen::Map<const VectorXd>(q, model->model.dof()));
  });
}

sc_status sc_model_forward_dynamics(const sc_model* model, const double* q, const double* q_dot,
                                    const double* tau, double* q_ddot) {
  if (!model || !q || !q_dot || !tau || !q_ddot) return null_argument("model or vector");
  return guarded([&] {
    const int n = model->model.dof();
    const int m = model->model.num_actuated();
    const State s{Eigen::Map<const VectorXd>(q, n), Eigen::Map<const VectorXd>(q_dot, n), 0.0};
    Eigen::Map<VectorXd>(q_ddot, n) =
        forward_dynamics(model->model, s, Eigen::Map<const VectorXd>(tau, m));
  });
}

sc_status sc_model_equilibrium(const sc_model* model, const double* q_bar_a,
                               const double* guess_u, double* q_u) {
  if (!model || !q_bar_a || !guess_u || !q_u) return null_argument("model or vector");
  return guarded([&] {
    const int m = model->model.num_actuated();
    const int u = model->model.dof() - m;
    Eigen::Map<VectorXd>(q_u, u) =
        equilibrium_solve(model->model, Eigen::Map<const VectorXd>(q_bar_a, m),
                          Eigen::Map<const VectorXd>(guess_u, u));
  });
}

}  // extern "C"
