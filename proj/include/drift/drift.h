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

// C interface to the drift envelope library. Objects are opaque handles
// released with the matching *_free function; every call returns a status
// code and, on failure, leaves a message in drift_last_error() (per thread).
// Output arguments are written only on success.

#ifndef DRIFT_DRIFT_H_
#define DRIFT_DRIFT_H_

#include <stddef.h>

#if defined(DRIFT_BUILDING_LIBRARY)
#define DRIFT_API __attribute__((visibility("default")))
#else
#define DRIFT_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum drift_status {
  DRIFT_OK = 0,
  DRIFT_ERR_INVALID_ARGUMENT = 1,
  DRIFT_ERR_CONFIG = 2,
  DRIFT_ERR_DOMAIN = 3,
  DRIFT_ERR_IO = 4,
  DRIFT_ERR_INTERNAL = 5
} drift_status;

typedef struct drift_config drift_config;
typedef struct drift_fit drift_fit;
typedef struct drift_table drift_table;
typedef struct drift_sim drift_sim;

typedef struct drift_metrics {
  double speed_error;         // m/s, mean over the final 20%
  double beta_error;          // rad
  double yaw_rate_error;      // rad/s
  double peak_lateral_error;  // m
  int envelope_violations;
  double settling_time;  // s, negative when never settled
  int partial;
  int degraded_steps;
  int held_steps;
} drift_metrics;

DRIFT_API const char* drift_version(void);
DRIFT_API const char* drift_status_string(drift_status status);
DRIFT_API const char* drift_last_error(void);

// Configuration. drift_config_set replaces one entry addressed by a dotted
// key such as "scenario.plant_mu" with a JSON value such as "0.6".
DRIFT_API drift_status drift_config_default(drift_config** out);
DRIFT_API drift_status drift_config_load(const char* path, drift_config** out);
DRIFT_API drift_status drift_config_set(drift_config* config, const char* key,
                                        const char* json_value);
DRIFT_API drift_status drift_config_write(const drift_config* config, const char* path);
DRIFT_API void drift_config_free(drift_config* config);

// Equilibria at the configured analysis conditions, written to
// <out_dir>/equilibria.csv.
DRIFT_API drift_status drift_equilibria(const drift_config* config, const char* out_dir,
                                        int* count);
// Handling diagram branches and intersections, written to
// <out_dir>/handling_diagram.csv and <out_dir>/handling_intersections.csv.
DRIFT_API drift_status drift_handling_diagram(const drift_config* config, const char* out_dir,
                                              int* intersections);

// Saddle dataset over the configured grid and the fitted saddle model. When
// out_dir is non-null, saddle_dataset.json and saddle_fit.json are written.
DRIFT_API drift_status drift_fit_saddle(const drift_config* config, const char* out_dir,
                                        drift_fit** out);
DRIFT_API drift_status drift_fit_load(const char* path, drift_fit** out);
DRIFT_API drift_status drift_fit_write(const drift_fit* fit, const char* path);
DRIFT_API drift_status drift_fit_rms(const drift_fit* fit, double* rms_beta, double* rms_r);
DRIFT_API void drift_fit_free(drift_fit* fit);

// Single dual envelope as polyline CSV.
DRIFT_API drift_status drift_envelope_polylines(const drift_config* config, const drift_fit* fit,
                                                double vx, double mu, const char* csv_path);
// Envelope table over the given axes (the configured envelope axes and box
// when vx or mu is null).
DRIFT_API drift_status drift_table_build(const drift_config* config, const drift_fit* fit,
                                         const double* vx, size_t n_vx, const double* mu,
                                         size_t n_mu, drift_table** out);
DRIFT_API drift_status drift_table_load(const char* path, drift_table** out);
DRIFT_API drift_status drift_table_write(const drift_table* table, const char* path);
// inner: positive outside the inner region; outer: positive inside the
// outer region.
DRIFT_API drift_status drift_table_query(const drift_table* table, double vx, double mu,
                                         double beta, double r, double* inner, double* outer);
DRIFT_API void drift_table_free(drift_table* table);

// Closed-loop run of the configured scenario. With the envelope enabled a
// table is required: the given one, or one built from the fit over the
// controller table axes.
DRIFT_API drift_status drift_simulate(const drift_config* config, const drift_fit* fit,
                                      const drift_table* table, int record_trace,
                                      drift_sim** out);
// Writes sim_log.csv, solver_log.csv, phase_trajectory.csv, metrics.json and,
// when traces were recorded, sqp_trace.csv into out_dir.
DRIFT_API drift_status drift_sim_write(const drift_sim* sim, const char* out_dir);
DRIFT_API drift_status drift_sim_metrics(const drift_sim* sim, drift_metrics* out);
DRIFT_API drift_status drift_sim_complete(const drift_sim* sim, int* complete);
DRIFT_API void drift_sim_free(drift_sim* sim);

// Metrics of a time-history CSV against the configured scenario; writes
// metrics JSON when json_path is non-null.
DRIFT_API drift_status drift_metrics_from_log(const drift_config* config, const char* csv_path,
                                              const char* json_path, drift_metrics* out);

// Wheel torques [fl, fr, rl, rr] for u = [delta, fxr, dmz].
DRIFT_API drift_status drift_torque_allocation(const drift_config* config, const double u[3],
                                               double torques[4]);

#ifdef __cplusplus
}
#endif

#endif  // DRIFT_DRIFT_H_
