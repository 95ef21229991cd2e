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

#include "drift/sim.hpp"

#include <cmath>

#include "drift/common.hpp"

namespace drift::sim {

namespace {

constexpr double kSpeedBand = 0.2938;
constexpr double kBetaBand = 0.0302;
constexpr double kYawRateBand = 0.0156;

void log_distances(SimRecord& rec, const nmpc::NmpcConfig& config, double design_mu) {
  if (!config.table) return;
  const envelope::TableQuery q = envelope::query(*config.table, rec.x(vehicle::kVx), design_mu,
                                                 rec.x(vehicle::kBeta), rec.x(vehicle::kYawRate));
  rec.d_inner = q.inner;
  rec.d_outer = q.outer;
}

}  // namespace

void Scenario::validate() const {
  if (!(plant_mu > 0.0) || !(design_mu > 0.0)) throw ConfigError("Scenario: mu must be positive");
  if (!(radius > 0.0)) throw ConfigError("Scenario: radius must be positive");
  if (!(speed > vehicle::kMinSpeed)) throw ConfigError("Scenario: speed below the kinematic floor");
  if (!(duration >= 0.0)) throw ConfigError("Scenario: duration must be nonnegative");
  if (!(dt > 0.0)) throw ConfigError("Scenario: dt must be positive");
  if (initial && !initial->allFinite()) throw ConfigError("Scenario: non-finite initial state");
}

vehicle::StateVec initial_state(const Scenario& sc, const nmpc::NmpcConfig& config,
                                const equilibrium::Model& model) {
  if (sc.initial) return *sc.initial;
  nmpc::ReferenceOptions opt;
  opt.branch = nmpc::SteadyBranch::kCornering;
  opt.beta_min = -0.3;
  opt.beta_max = 0.3;
  opt.box = config.box;
  return nmpc::compute_reference(sc.radius, sc.speed, sc.plant_mu, model, config, opt).state();
}

SimLog run_closed_loop(const Scenario& sc, const nmpc::NmpcConfig& base,
                       const equilibrium::Model& model, bool record_traces) {
  sc.validate();
  nmpc::NmpcConfig config = base;
  config.design_mu = sc.design_mu;
  config.use_envelope = sc.use_envelope;
  if (std::abs(config.dt - sc.dt) > 1e-12)
    throw ConfigError("Scenario: dt must match the controller sampling time");
  config.validate();

  SimLog log;
  log.scenario = sc;
  log.reference = nmpc::compute_reference(sc.radius, sc.speed, sc.design_mu, model, config);
  const vehicle::StateVec x_ref = log.reference.state();

  vehicle::ModelContext plant;
  plant.vehicle = model.vehicle;
  plant.tire = model.tire;
  plant.mu = sc.plant_mu;
  plant.kappa = log.reference.kappa;

  nmpc::Controller controller(config, log.reference, model);
  controller.record_trace = record_traces;

  const long steps = std::lround(sc.duration / sc.dt);
  vehicle::StateVec x = initial_state(sc, config, model);
  for (long k = 0;; ++k) {
    SimRecord rec;
    rec.t = static_cast<double>(k) * sc.dt;
    rec.x = x;
    rec.x_ref = x_ref;
    log_distances(rec, config, sc.design_mu);
    if (k == steps) {
      log.records.push_back(rec);
      break;
    }
    try {
      rec.command = controller.step(x);
      rec.commanded = true;
      if (record_traces) log.traces.push_back(controller.last_trace());
      const vehicle::InputVec applied =
          nmpc::reconstruct_input(rec.command.torques, rec.command.u(0), model.vehicle);
      log.records.push_back(rec);
      x = vehicle::rk4_step<double>(x, applied, sc.dt, plant);
      if (!x.allFinite()) throw DomainError("plant state became non-finite");
    } catch (const DomainError& e) {
      if (log.records.empty() || log.records.back().t != rec.t) log.records.push_back(rec);
      log.complete = false;
      log.failure = e.what();
      break;
    }
  }
  return log;
}

Metrics compute_metrics(const SimLog& log) {
  Metrics m;
  const auto& recs = log.records;
  m.partial = !log.complete;
  if (recs.empty()) {
    m.partial = true;
    return m;
  }
  const double t_end = recs.back().t;
  const double window_start = t_end - 0.2 * log.scenario.duration;
  if (t_end + 1e-9 < log.scenario.duration) m.partial = true;

  int count = 0;
  for (const SimRecord& r : recs) {
    m.peak_lateral_error = std::max(m.peak_lateral_error, std::abs(r.x(vehicle::kE)));
    if (r.d_outer < -1e-6) ++m.envelope_violations;
    if (r.command.status == nmpc::CommandStatus::kDegraded) ++m.degraded_steps;
    if (r.command.status == nmpc::CommandStatus::kHeld) ++m.held_steps;
    if (r.t >= window_start - 1e-9) {
      m.speed_error += r.x(vehicle::kVx) - r.x_ref(vehicle::kVx);
      m.beta_error += r.x(vehicle::kBeta) - r.x_ref(vehicle::kBeta);
      m.yaw_rate_error += r.x(vehicle::kYawRate) - r.x_ref(vehicle::kYawRate);
      ++count;
    }
  }
  if (count > 0) {
    m.speed_error /= count;
    m.beta_error /= count;
    m.yaw_rate_error /= count;
  }

  m.settling_time = -1.0;
  for (std::size_t i = recs.size(); i-- > 0;) {
    const SimRecord& r = recs[i];
    const bool inside =
        std::abs(r.x(vehicle::kVx) - r.x_ref(vehicle::kVx)) <= kSpeedBand &&
        std::abs(r.x(vehicle::kBeta) - r.x_ref(vehicle::kBeta)) <= kBetaBand &&
        std::abs(r.x(vehicle::kYawRate) - r.x_ref(vehicle::kYawRate)) <= kYawRateBand;
    if (!inside) break;
    m.settling_time = r.t;
  }
  return m;
}

}  // namespace drift::sim
