/* C interface of the softcoupled library.
 *
 * All objects are opaque handles owned by the caller and released with the
 * matching *_free function. Functions return an sc_status; on failure the
 * message of the last error on the calling thread is available from
 * sc_last_error(). Strings returned through char** are released with
 * sc_string_free(). Matrices are written row-major. */
#ifndef SOFTCOUPLED_H
#define SOFTCOUPLED_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SC_API __declspec(dllexport)
#else
#define SC_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sc_status {
  SC_OK = 0,
  SC_ERR_ARGUMENT = 1,
  SC_ERR_PARSE = 2,
  SC_ERR_IO = 3,
  SC_ERR_DIVERGENCE = 4,
  SC_ERR_ILL_CONDITIONED = 5,
  SC_ERR_SOLVER = 6,
  SC_ERR_SINGULAR = 7,
  SC_ERR_DEGENERATE_GEOMETRY = 8,
  SC_ERR_UNSUPPORTED_FAMILY = 9,
  SC_ERR_DEGENERATE_DATASET = 10,
  SC_ERR_CERTIFICATE = 11,
  SC_ERR_INTERNAL = 99
} sc_status;

typedef struct sc_scenario sc_scenario;
typedef struct sc_result sc_result;
typedef struct sc_model sc_model;

SC_API const char* sc_version(void);
SC_API const char* sc_status_name(sc_status status);
/* Message of the last failure on this thread ("" when none). */
SC_API const char* sc_last_error(void);
/* Step index of the last divergence on this thread, -1 otherwise. */
SC_API long long sc_last_divergence_step(void);
SC_API void sc_string_free(char* s);

/* Scenarios */
SC_API sc_status sc_scenario_load(const char* path, sc_scenario** out);
SC_API sc_status sc_scenario_parse(const char* text, const char* origin, sc_scenario** out);
SC_API void sc_scenario_free(sc_scenario* scenario);
SC_API sc_status sc_scenario_set_dt(sc_scenario* scenario, double dt);
SC_API sc_status sc_scenario_set_duration(sc_scenario* scenario, double duration);
SC_API sc_status sc_scenario_set_output(sc_scenario* scenario, const char* path);
SC_API sc_status sc_scenario_set_seed(sc_scenario* scenario, uint64_t seed);
SC_API sc_status sc_scenario_validate(const sc_scenario* scenario);
SC_API sc_status sc_scenario_emit(const sc_scenario* scenario, char** out);
SC_API const char* sc_scenario_kind(const sc_scenario* scenario);
SC_API const char* sc_scenario_output(const sc_scenario* scenario);

/* Runs. sc_run writes the CSV log when the scenario has an output path. */
SC_API sc_status sc_run(const sc_scenario* scenario, sc_result** out);
SC_API void sc_result_free(sc_result* result);
/* Zero when a requested certificate failed. */
SC_API int sc_result_ok(const sc_result* result);
SC_API const char* sc_result_report(const sc_result* result);
SC_API const char* sc_result_metrics_json(const sc_result* result);
SC_API size_t sc_result_rows(const sc_result* result);
SC_API sc_status sc_result_write_csv(const sc_result* result, const char* path);

/* Gain certificate: report text and verdict (1 pass, 0 fail). */
SC_API sc_status sc_certify(const sc_scenario* scenario, char** report, int* verdict);
/* Identification fits as CSV (family,k_hat,r_squared,n_samples). */
SC_API sc_status sc_identify(const sc_scenario* scenario, char** fits_csv);

/* Model queries on the robot of a scenario. */
SC_API sc_status sc_model_from_scenario(const sc_scenario* scenario, sc_model** out);
SC_API void sc_model_free(sc_model* model);
SC_API int sc_model_dof(const sc_model* model);
SC_API int sc_model_num_actuated(const sc_model* model);
SC_API sc_status sc_model_mass_matrix(const sc_model* model, const double* q, double* out);
SC_API sc_status sc_model_gravity(const sc_model* model, const double* q, double* out);
SC_API sc_status sc_model_elastic_force(const sc_model* model, const double* q, double* out);
SC_API sc_status sc_model_elastic_energy(const sc_model* model, const double* q, double* out);
SC_API sc_status sc_model_forward_dynamics(const sc_model* model, const double* q,
                                           const double* q_dot, const double* tau,
                                           double* q_ddot);
/* Unactuated equilibrium for actuated angles q_bar_a, starting at guess_u. */
SC_API sc_status sc_model_equilibrium(const sc_model* model, const double* q_bar_a,
                                      const double* guess_u, double* q_u);

#ifdef __cplusplus
}
#endif

#endif
