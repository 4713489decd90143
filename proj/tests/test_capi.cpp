#include <gtest/gtest.h>

#include <cstring>
#include <string>
#include <vector>

#include "softcoupled/softcoupled.h"

namespace {

std::string scenario_path(const char* name) {
  return std::string(SOFTCOUPLED_SCENARIO_DIR) + "/" + name;
}

TEST(CApi, LoadRunAndQuery) {
  sc_scenario* s = nullptr;
  ASSERT_EQ(sc_scenario_load(scenario_path("finger.scenario").c_str(), &s), SC_OK) << sc_last_error();
  EXPECT_STREQ(sc_scenario_kind(s), "regulate");
  ASSERT_EQ(sc_scenario_set_duration(s, 0.1), SC_OK);
  ASSERT_EQ(sc_scenario_set_output(s, ""), SC_OK);
  sc_result* r = nullptr;
  ASSERT_EQ(sc_run(s, &r), SC_OK) << sc_last_error();
  EXPECT_EQ(sc_result_rows(r), 101u);
  EXPECT_EQ(sc_result_ok(r), 1);
  EXPECT_NE(std::strstr(sc_result_metrics_json(r), "steady_state_error"), nullptr);
  sc_result_free(r);

  sc_model* m = nullptr;
  ASSERT_EQ(sc_model_from_scenario(s, &m), SC_OK);
  EXPECT_EQ(sc_model_dof(m), 3);
  EXPECT_EQ(sc_model_num_actuated(m), 2);
  const double q[3] = {0.0, 0.0, 0.0};
  double M[9];
  ASSERT_EQ(sc_model_mass_matrix(m, q, M), SC_OK);
  EXPECT_DOUBLE_EQ(M[1], M[3]);
  const double qa[2] = {-1.1, 0.7};
  const double guess[1] = {0.0};
  double qu[1];
  ASSERT_EQ(sc_model_equilibrium(m, qa, guess, qu), SC_OK);
  double G[3];
  ASSERT_EQ(sc_model_gravity(m, q, G), SC_OK);
  EXPECT_NEAR(G[0], 0.1 * 9.81 * 4.5, 1e-12);
  EXPECT_NEAR(G[2], 0.1 * 9.81 * 0.5, 1e-12);
  sc_model_free(m);
  sc_scenario_free(s);
}

TEST(CApi, ErrorCodesAndMessages) {
  sc_scenario* s = nullptr;
  EXPECT_EQ(sc_scenario_load("/nonexistent.scenario", &s), SC_ERR_IO);
  EXPECT_EQ(s, nullptr);
  EXPECT_NE(std::string(sc_last_error()).find("/nonexistent.scenario"), std::string::npos);
  EXPECT_EQ(sc_scenario_parse("{\"scenario\": 3", "inline", &s), SC_ERR_PARSE);
  EXPECT_EQ(sc_scenario_load(nullptr, &s), SC_ERR_ARGUMENT);
  EXPECT_STREQ(sc_status_name(SC_ERR_DIVERGENCE), "divergence");

  ASSERT_EQ(sc_scenario_load(scenario_path("finger.scenario").c_str(), &s), SC_OK);
  EXPECT_EQ(sc_scenario_set_dt(s, -1.0), SC_ERR_PARSE);
  EXPECT_EQ(sc_scenario_set_dt(s, 100.0), SC_ERR_PARSE);
  char* report = nullptr;
  int verdict = -1;
  ASSERT_EQ(sc_certify(s, &report, &verdict), SC_OK);
  EXPECT_EQ(verdict, 0);
  EXPECT_NE(std::strstr(report, "verdict: FAIL"), nullptr);
  sc_string_free(report);
  sc_scenario_free(s);
}

TEST(CApi, DivergenceReportsStep) {
  sc_scenario* s = nullptr;
  ASSERT_EQ(sc_scenario_load(scenario_path("finger.scenario").c_str(), &s), SC_OK);
  ASSERT_EQ(sc_scenario_set_output(s, ""), SC_OK);
  // Far beyond the RK4 stability limit of the finger.
  ASSERT_EQ(sc_scenario_set_dt(s, 1.0), SC_OK);
  sc_result* r = nullptr;
  EXPECT_EQ(sc_run(s, &r), SC_ERR_DIVERGENCE);
  EXPECT_EQ(sc_last_divergence_step(), 3);
  EXPECT_NE(std::string(sc_last_error()).find("step 3"), std::string::npos);
  EXPECT_EQ(r, nullptr);
  sc_scenario_free(s);
}

TEST(CApi, EmitRoundTrip) {
  sc_scenario* s = nullptr;
  ASSERT_EQ(sc_scenario_load(scenario_path("flipper.scenario").c_str(), &s), SC_OK);
  char* text = nullptr;
  ASSERT_EQ(sc_scenario_emit(s, &text), SC_OK);
  sc_scenario* t = nullptr;
  ASSERT_EQ(sc_scenario_parse(text, "emitted", &t), SC_OK) << sc_last_error();
  char* again = nullptr;
  ASSERT_EQ(sc_scenario_emit(t, &again), SC_OK);
  EXPECT_STREQ(text, again);
  sc_string_free(text);
  sc_string_free(again);
  sc_scenario_free(s);
  sc_scenario_free(t);
}

TEST(CApi, IdentifyCsv) {
  sc_scenario* s = nullptr;
  ASSERT_EQ(sc_scenario_load(scenario_path("identify.scenario").c_str(), &s), SC_OK);
  char* csv = nullptr;
  ASSERT_EQ(sc_identify(s, &csv), SC_OK);
  EXPECT_EQ(std::strncmp(csv, "family,k_hat,r_squared,n_samples\n", 33), 0);
  sc_string_free(csv);
  sc_scenario_free(s);
}

}  // namespace
