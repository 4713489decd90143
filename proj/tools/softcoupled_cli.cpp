// Scenario runner. Exit status: 0 success, 1 failed certificate,
// 2 parse or argument error, 3 divergence, 4 any other failure.
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "softcoupled/softcoupled.h"

namespace {

enum Exit { kOk = 0, kCertificate = 1, kParse = 2, kDivergence = 3, kFailure = 4 };

struct Overrides {
  std::optional<double> dt;
  std::optional<double> duration;
  std::optional<std::string> output;
  std::optional<uint64_t> seed;
};

int exit_code(sc_status s) {
  switch (s) {
    case SC_OK: return kOk;
    case SC_ERR_PARSE:
    case SC_ERR_ARGUMENT: return kParse;
    case SC_ERR_DIVERGENCE: return kDivergence;
    case SC_ERR_CERTIFICATE: return kCertificate;
    default: return kFailure;
  }
}

int report_error(sc_status s) {
  std::fprintf(stderr, "error (%s): %s\n", sc_status_name(s), sc_last_error());
  if (s == SC_ERR_DIVERGENCE)
    std::fprintf(stderr, "diverged at step %lld\n", sc_last_divergence_step());
  return exit_code(s);
}

struct ScenarioHandle {
  sc_scenario* ptr = nullptr;
  ~ScenarioHandle() { sc_scenario_free(ptr); }
};

sc_status load(const std::string& path, const Overrides& o, ScenarioHandle& h) {
  sc_status s = sc_scenario_load(path.c_str(), &h.ptr);
  if (s != SC_OK) return s;
  if (o.duration && (s = sc_scenario_set_duration(h.ptr, *o.duration)) != SC_OK) return s;
  if (o.dt && (s = sc_scenario_set_dt(h.ptr, *o.dt)) != SC_OK) return s;
  if (o.output && (s = sc_scenario_set_output(h.ptr, o.output->c_str())) != SC_OK) return s;
  if (o.seed && (s = sc_scenario_set_seed(h.ptr, *o.seed)) != SC_OK) return s;
  return SC_OK;
}

bool write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  out << text;
  out.flush();
  if (!out) {
    std::fprintf(stderr, "error (io): cannot write '%s'\n", path.c_str());
    return false;
  }
  return true;
}

int cmd_simulate(const std::string& path, const Overrides& o) {
  ScenarioHandle h;
  sc_status s = load(path, o, h);
  if (s != SC_OK) return report_error(s);
  sc_result* r = nullptr;
  s = sc_run(h.ptr, &r);
  if (s != SC_OK) return report_error(s);
  std::fputs(sc_result_report(r), stdout);
  const std::string output = sc_scenario_output(h.ptr);
  int code = sc_result_ok(r) ? kOk : kCertificate;
  if (!output.empty()) {
    std::printf("csv: %s\n", output.c_str());
    if (!write_text(output + ".summary.json", sc_result_metrics_json(r))) code = kFailure;
  }
  sc_result_free(r);
  return code;
}

int cmd_certify(const std::string& path, const Overrides& o) {
  ScenarioHandle h;
  sc_status s = load(path, o, h);
  if (s != SC_OK) return report_error(s);
  char* report = nullptr;
  int verdict = 0;
  s = sc_certify(h.ptr, &report, &verdict);
  if (s != SC_OK) return report_error(s);
  std::fputs(report, stdout);
  const std::string output = sc_scenario_output(h.ptr);
  const bool written = output.empty() || write_text(output, report);
  sc_string_free(report);
  if (!written) return kFailure;
  return verdict ? kOk : kCertificate;
}

int cmd_identify(const std::string& path, const Overrides& o) {
  ScenarioHandle h;
  sc_status s = load(path, o, h);
  if (s != SC_OK) return report_error(s);
  char* fits = nullptr;
  s = sc_identify(h.ptr, &fits);
  if (s != SC_OK) return report_error(s);
  std::fputs(fits, stdout);
  const std::string output = sc_scenario_output(h.ptr);
  const bool written = output.empty() || write_text(output, fits);
  sc_string_free(fits);
  return written ? kOk : kFailure;
}

int cmd_validate(const std::string& path, const Overrides& o) {
  ScenarioHandle h;
  const sc_status s = load(path, o, h);
  if (s != SC_OK) return report_error(s);
  std::printf("%s: ok (%s)\n", path.c_str(), sc_scenario_kind(h.ptr));
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation, certification and identification of elastically coupled planar robots"};
  app.require_subcommand(1);
  app.set_version_flag("--version", sc_version());

  Overrides o;
  std::string config;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("config", config, "Scenario file")->required();
    sub->add_option("--dt", o.dt, "Override the integration step (s)");
    sub->add_option("--duration", o.duration, "Override the simulated duration (s)");
    sub->add_option("--output", o.output, "Override the output path");
    sub->add_option("--seed", o.seed, "Override the random seed");
  };
  auto* simulate = app.add_subcommand("simulate", "Run a scenario and write its CSV log");
  auto* certify = app.add_subcommand("certify", "Check the regulator gains against the stability certificate");
  auto* identify = app.add_subcommand("identify", "Fit coupling stiffness for each model family");
  auto* validate = app.add_subcommand("validate", "Parse and validate a scenario");
  for (auto* sub : {simulate, certify, identify, validate}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kParse;
  }

  if (simulate->parsed()) return cmd_simulate(config, o);
  if (certify->parsed()) return cmd_certify(config, o);
  if (identify->parsed()) return cmd_identify(config, o);
  return cmd_validate(config, o);
}
