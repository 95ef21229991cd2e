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

// Closed-loop drift simulation: NMPC on the nominal model driving the 3DOF
// plant, logging and steady-state metrics.

#ifndef DRIFT_SIM_HPP_
#define DRIFT_SIM_HPP_

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "drift/nmpc.hpp"

namespace drift::sim {

struct Scenario {
  double plant_mu = 0.55;
  double design_mu = 0.55;
  double radius = 14.4;  // [m]
  double speed = 8.0;    // target total speed [m/s]
  double duration = 20.0;  // [s]
  double dt = 0.02;        // [s]
  // Initial [e, dpsi, Vx, beta, r]; unset: the plant's steady cornering
  // state (both axles below their force peaks) on the circle at `speed`.
  std::optional<vehicle::StateVec> initial;
  bool use_envelope = true;
  std::uint64_t seed = 0;  // no randomized perturbations are drawn

  void validate() const;  // throws ConfigError
};

struct SimRecord {
  double t = 0.0;
  vehicle::StateVec x = vehicle::StateVec::Zero();
  vehicle::StateVec x_ref = vehicle::StateVec::Zero();
  nmpc::ControlCommand command;  // applied over [t, t + dt)
  bool commanded = false;        // false on the last row and on a failed solve
  double d_inner = 0.0;          // positive outside the inner region
  double d_outer = 0.0;          // positive inside the outer region
};

struct SimLog {
  Scenario scenario;
  nmpc::DriftReference reference;
  std::vector<SimRecord> records;
  bool complete = true;
  std::string failure;  // set when the run stopped early
  // Per-step solver traces when requested, traces[k] for records[k].
  std::vector<std::vector<sqp::TraceRow>> traces;
};

// `config` carries the controller settings and the design-mu envelope
// table; its design_mu and use_envelope are taken from the scenario.
vehicle::StateVec initial_state(const Scenario& scenario, const nmpc::NmpcConfig& config,
                                const equilibrium::Model& model);

SimLog run_closed_loop(const Scenario& scenario, const nmpc::NmpcConfig& config,
                       const equilibrium::Model& model, bool record_traces = false);

struct Metrics {
  double speed_error = 0.0;  // mean(Vx - Vx_ref) over the final 20% [m/s]
  double beta_error = 0.0;   // [rad]
  double yaw_rate_error = 0.0;  // [rad/s]
  double peak_lateral_error = 0.0;  // max |e| over the run [m]
  int envelope_violations = 0;      // rows with d_outer < -1e-6
  double settling_time = 0.0;  // [s]; negative when the bands are never held
  bool partial = false;        // log truncated or shorter than the window
  int degraded_steps = 0;
  int held_steps = 0;
};

// Settling: first time after which |Vx - Vx_ref| <= 0.2938, |beta - beta_ref|
// <= 0.0302 and |r - r_ref| <= 0.0156 hold to the end of the run.
Metrics compute_metrics(const SimLog& log);

}  // namespace drift::sim

#endif  // DRIFT_SIM_HPP_
