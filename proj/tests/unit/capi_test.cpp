// Copyright 2026 The Drift Envelope Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cmath>
#include <filesystem>
#include <string>

#include <gtest/gtest.h>

#include "drift/drift.h"

namespace {

class CApi : public ::testing::Test {
 protected:
  void SetUp() override { ASSERT_EQ(drift_config_default(&config_), DRIFT_OK); }
  void TearDown() override { drift_config_free(config_); }
  drift_config* config_ = nullptr;
};

TEST_F(CApi, VersionAndStatusStrings) {
  EXPECT_NE(std::string(drift_version()), "");
  EXPECT_EQ(std::string(drift_status_string(DRIFT_OK)), "ok");
}

TEST_F(CApi, NullArgumentsAreRejected) {
  EXPECT_EQ(drift_config_default(nullptr), DRIFT_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(drift_config_set(nullptr, "scenario.plant_mu", "0.5"), DRIFT_ERR_INVALID_ARGUMENT);
  EXPECT_EQ(drift_config_set(config_, nullptr, "0.5"), DRIFT_ERR_INVALID_ARGUMENT);
  int count = 0;
  EXPECT_EQ(drift_equilibria(nullptr, "x", &count), DRIFT_ERR_INVALID_ARGUMENT);
  double t[4];
  EXPECT_EQ(drift_torque_allocation(config_, nullptr, t), DRIFT_ERR_INVALID_ARGUMENT);
  EXPECT_NE(std::string(drift_last_error()), "");
  drift_config_free(nullptr);
  drift_fit_free(nullptr);
  drift_table_free(nullptr);
  drift_sim_free(nullptr);
}

TEST_F(CApi, ConfigSet) {
  EXPECT_EQ(drift_config_set(config_, "scenario.plant_mu", "0.5"), DRIFT_OK);
  EXPECT_EQ(drift_config_set(config_, "scenario.plant_mux", "0.5"), DRIFT_ERR_CONFIG);
  EXPECT_EQ(drift_config_set(config_, "scenario.plant_mu", "\"high\""), DRIFT_ERR_CONFIG);
  EXPECT_EQ(drift_config_set(config_, "scenario.plant_mu", "{"), DRIFT_ERR_CONFIG);
}

TEST_F(CApi, TorqueAllocation) {
  const double u[3] = {0.1, 2000.0, -1500.0};
  double t[4];
  ASSERT_EQ(drift_torque_allocation(config_, u, t), DRIFT_OK);
  EXPECT_EQ(t[0], -t[1]);
  EXPECT_EQ(t[2], t[3]);
  EXPECT_GT(t[2], 0.0);
  const double bad[3] = {1.6, 0.0, 0.0};
  EXPECT_EQ(drift_torque_allocation(config_, bad, t), DRIFT_ERR_DOMAIN);
}

TEST_F(CApi, MissingFilesAreIoErrors) {
  drift_config* c = nullptr;
  EXPECT_EQ(drift_config_load("/nonexistent-dir/c.json", &c), DRIFT_ERR_IO);
  drift_fit* f = nullptr;
  EXPECT_EQ(drift_fit_load("/nonexistent-dir/f.json", &f), DRIFT_ERR_IO);
}

TEST_F(CApi, EquilibriaAndShortSimulation) {
  const std::filesystem::path dir = std::filesystem::temp_directory_path() / "drift_capi_test";
  int count = 0;
  ASSERT_EQ(drift_equilibria(config_, dir.c_str(), &count), DRIFT_OK);
  EXPECT_GE(count, 3);
  EXPECT_TRUE(std::filesystem::exists(dir / "equilibria.csv"));

  ASSERT_EQ(drift_config_set(config_, "scenario.use_envelope", "false"), DRIFT_OK);
  ASSERT_EQ(drift_config_set(config_, "scenario.duration", "0.1"), DRIFT_OK);
  drift_sim* sim = nullptr;
  ASSERT_EQ(drift_simulate(config_, nullptr, nullptr, 1, &sim), DRIFT_OK) << drift_last_error();
  int complete = 0;
  ASSERT_EQ(drift_sim_complete(sim, &complete), DRIFT_OK);
  EXPECT_EQ(complete, 1);
  drift_metrics m;
  ASSERT_EQ(drift_sim_metrics(sim, &m), DRIFT_OK);
  ASSERT_EQ(drift_sim_write(sim, dir.c_str()), DRIFT_OK);
  EXPECT_TRUE(std::filesystem::exists(dir / "sqp_trace.csv"));
  drift_sim_free(sim);

  drift_metrics again;
  ASSERT_EQ(drift_metrics_from_log(config_, (dir / "sim_log.csv").c_str(), nullptr, &again),
            DRIFT_OK);
  EXPECT_EQ(again.speed_error, m.speed_error);
  EXPECT_EQ(again.beta_error, m.beta_error);
  EXPECT_EQ(again.settling_time, m.settling_time);
  std::filesystem::remove_all(dir);
}

TEST_F(CApi, EnvelopeRequiresAFitOrTable) {
  ASSERT_EQ(drift_config_set(config_, "scenario.duration", "0.1"), DRIFT_OK);
  drift_sim* sim = nullptr;
  EXPECT_EQ(drift_simulate(config_, nullptr, nullptr, 0, &sim), DRIFT_ERR_INVALID_ARGUMENT);
}

}  // namespace
