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

#include "drift/drift.h"

#include <memory>
#include <new>
#include <string>

#include "drift/common.hpp"
#include "drift/config.hpp"
#include "drift/envelope.hpp"
#include "drift/equilibrium.hpp"
#include "drift/io.hpp"
#include "drift/nmpc.hpp"
#include "drift/saddle_fit.hpp"
#include "drift/sim.hpp"
#include "json.hpp"

struct drift_config {
  drift::config::Config value;
};

struct drift_fit {
  std::shared_ptr<const drift::saddle::SaddleFit> value;
};

struct drift_table {
  std::shared_ptr<const drift::envelope::EnvelopeTable> value;
  drift::envelope::EnvelopeOptions options;
};

struct drift_sim {
  drift::sim::SimLog log;
  drift::sim::Metrics metrics;
};

namespace {

thread_local std::string g_last_error;

class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

template <typename F>
drift_status guard(F&& body) {
  try {
    body();
    g_last_error.clear();
    return DRIFT_OK;
  } catch (const ArgumentError& e) {
    g_last_error = e.what();
    return DRIFT_ERR_INVALID_ARGUMENT;
  } catch (const drift::ConfigError& e) {
    g_last_error = e.what();
    return DRIFT_ERR_CONFIG;
  } catch (const drift::DomainError& e) {
    g_last_error = e.what();
    return DRIFT_ERR_DOMAIN;
  } catch (const drift::IoError& e) {
    g_last_error = e.what();
    return DRIFT_ERR_IO;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return DRIFT_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return DRIFT_ERR_INTERNAL;
  }
}

template <typename T>
const T& require(const T* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be null");
  return *p;
}

void require_out(const void* p, const char* what) {
  if (!p) throw ArgumentError(std::string(what) + " must not be null");
}

std::string join(const char* dir, const char* name) {
  std::string path(dir);
  if (!path.empty() && path.back() != '/') path += '/';
  return path + name;
}

drift::nmpc::NmpcConfig controller_config(const drift::config::Config& c) {
  drift::nmpc::NmpcConfig n = c.nmpc;
  n.design_mu = c.scenario.design_mu;
  n.use_envelope = c.scenario.use_envelope;
  return n;
}

drift_metrics to_c(const drift::sim::Metrics& m) {
  drift_metrics out{};
  out.speed_error = m.speed_error;
  out.beta_error = m.beta_error;
  out.yaw_rate_error = m.yaw_rate_error;
  out.peak_lateral_error = m.peak_lateral_error;
  out.envelope_violations = m.envelope_violations;
  out.settling_time = m.settling_time;
  out.partial = m.partial ? 1 : 0;
  out.degraded_steps = m.degraded_steps;
  out.held_steps = m.held_steps;
  return out;
}

}  // namespace

extern "C" {

const char* drift_version(void) { return "1.0.0"; }

const char* drift_status_string(drift_status status) {
  switch (status) {
    case DRIFT_OK:
      return "ok";
    case DRIFT_ERR_INVALID_ARGUMENT:
      return "invalid argument";
    case DRIFT_ERR_CONFIG:
      return "configuration error";
    case DRIFT_ERR_DOMAIN:
      return "domain error";
    case DRIFT_ERR_IO:
      return "i/o error";
    case DRIFT_ERR_INTERNAL:
      return "internal error";
  }
  return "unknown status";
}

const char* drift_last_error(void) { return g_last_error.c_str(); }

drift_status drift_config_default(drift_config** out) {
  return guard([&] {
    require_out(out, "out");
    *out = new drift_config{};
  });
}

drift_status drift_config_load(const char* path, drift_config** out) {
  return guard([&] {
    require_out(path, "path");
    require_out(out, "out");
    auto c = std::make_unique<drift_config>();
    c->value = drift::config::load_config(path);
    *out = c.release();
  });
}

drift_status drift_config_set(drift_config* config, const char* key, const char* json_value) {
  return guard([&] {
    require_out(config, "config");
    require_out(key, "key");
    require_out(json_value, "json_value");
    drift_config& c = *config;
    const std::string k = key;
    using Json = nlohmann::ordered_json;
    Json root = Json::parse(drift::config::to_json(c.value));
    Json value;
    try {
      value = Json::parse(json_value);
    } catch (const Json::exception& e) {
      throw drift::ConfigError(std::string("config_set: malformed value: ") + e.what());
    }
    Json* node = &root;
    std::size_t start = 0;
    while (true) {
      const std::size_t dot = k.find('.', start);
      const std::string part = k.substr(start, dot == std::string::npos ? dot : dot - start);
      if (!node->is_object() || !node->contains(part))
        throw drift::ConfigError("config_set: unknown key '" + k + "'");
      node = &(*node)[part];
      if (dot == std::string::npos) break;
      start = dot + 1;
    }
    *node = value;
    c.value = drift::config::parse_config(root.dump());
  });
}

drift_status drift_config_write(const drift_config* config, const char* path) {
  return guard([&] {
    const drift_config& c = require(config, "config");
    require_out(path, "path");
    drift::io::write_file(path, drift::config::to_json(c.value));
  });
}

void drift_config_free(drift_config* config) { delete config; }

drift_status drift_equilibria(const drift_config* config, const char* out_dir, int* count) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    require_out(out_dir, "out_dir");
    const auto eqs = drift::equilibrium::find_equilibria(c.analysis.conditions, c.model,
                                                         c.analysis.search);
    drift::io::ensure_directory(out_dir);
    drift::io::write_file(join(out_dir, "equilibria.csv"), drift::io::equilibria_csv(eqs));
    if (count) *count = static_cast<int>(eqs.size());
  });
}

drift_status drift_handling_diagram(const drift_config* config, const char* out_dir,
                                    int* intersections) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    require_out(out_dir, "out_dir");
    const auto d = drift::equilibrium::handling_diagram(c.analysis.conditions, c.model,
                                                        c.analysis.handling_levels);
    drift::io::ensure_directory(out_dir);
    drift::io::write_file(join(out_dir, "handling_diagram.csv"),
                          drift::io::handling_diagram_csv(d));
    drift::io::write_file(join(out_dir, "handling_intersections.csv"),
                          drift::io::handling_intersections_csv(d));
    if (intersections) *intersections = static_cast<int>(d.intersections.size());
  });
}

drift_status drift_fit_saddle(const drift_config* config, const char* out_dir, drift_fit** out) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    require_out(out, "out");
    const auto data =
        drift::saddle::locate_saddles_grid(c.fit.grid, c.model, c.fit.domain, c.fit.workers);
    auto fit = std::make_shared<drift::saddle::SaddleFit>(
        drift::saddle::fit_saddle_model(data, c.model.vehicle, c.fit.options));
    if (out_dir) {
      drift::io::ensure_directory(out_dir);
      drift::io::write_file(join(out_dir, "saddle_dataset.json"), drift::io::dataset_json(data));
      drift::io::write_file(join(out_dir, "saddle_fit.json"), drift::io::fit_json(*fit));
    }
    *out = new drift_fit{std::move(fit)};
  });
}

drift_status drift_fit_load(const char* path, drift_fit** out) {
  return guard([&] {
    require_out(path, "path");
    require_out(out, "out");
    auto fit = std::make_shared<drift::saddle::SaddleFit>(
        drift::io::fit_from_json(drift::io::read_file(path)));
    *out = new drift_fit{std::move(fit)};
  });
}

drift_status drift_fit_write(const drift_fit* fit, const char* path) {
  return guard([&] {
    const auto& f = require(fit, "fit");
    require_out(path, "path");
    drift::io::write_file(path, drift::io::fit_json(*f.value));
  });
}

drift_status drift_fit_rms(const drift_fit* fit, double* rms_beta, double* rms_r) {
  return guard([&] {
    const auto& f = require(fit, "fit");
    if (rms_beta) *rms_beta = f.value->rms_beta;
    if (rms_r) *rms_r = f.value->rms_r;
  });
}

void drift_fit_free(drift_fit* fit) { delete fit; }

drift_status drift_envelope_polylines(const drift_config* config, const drift_fit* fit, double vx,
                                      double mu, const char* csv_path) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    const auto& f = require(fit, "fit");
    require_out(csv_path, "csv_path");
    const auto env = drift::envelope::build_dual_envelope(vx, mu, c.envelope.box, *f.value,
                                                          c.model, c.envelope.options);
    drift::io::write_file(csv_path, drift::io::envelope_polylines_csv(env));
  });
}

drift_status drift_table_build(const drift_config* config, const drift_fit* fit, const double* vx,
                               size_t n_vx, const double* mu, size_t n_mu, drift_table** out) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    const auto& f = require(fit, "fit");
    require_out(out, "out");
    const std::vector<double> vxs = vx ? std::vector<double>(vx, vx + n_vx) : c.envelope.vx;
    const std::vector<double> mus = mu ? std::vector<double>(mu, mu + n_mu) : c.envelope.mu;
    auto table = std::make_shared<drift::envelope::EnvelopeTable>(drift::envelope::build_table(
        vxs, mus, c.envelope.box, *f.value, c.model, c.envelope.options, c.envelope.workers));
    *out = new drift_table{std::move(table), c.envelope.options};
  });
}

drift_status drift_table_load(const char* path, drift_table** out) {
  return guard([&] {
    require_out(path, "path");
    require_out(out, "out");
    auto table = std::make_shared<drift::envelope::EnvelopeTable>(
        drift::io::table_from_json(drift::io::read_file(path)));
    *out = new drift_table{std::move(table), {}};
  });
}

drift_status drift_table_write(const drift_table* table, const char* path) {
  return guard([&] {
    const auto& t = require(table, "table");
    require_out(path, "path");
    drift::io::write_file(path, drift::io::table_json(*t.value, t.options));
  });
}

drift_status drift_table_query(const drift_table* table, double vx, double mu, double beta,
                               double r, double* inner, double* outer) {
  return guard([&] {
    const auto& t = require(table, "table");
    const auto q = drift::envelope::query(*t.value, vx, mu, beta, r);
    if (inner) *inner = q.inner;
    if (outer) *outer = q.outer;
  });
}

void drift_table_free(drift_table* table) { delete table; }

drift_status drift_simulate(const drift_config* config, const drift_fit* fit,
                            const drift_table* table, int record_trace, drift_sim** out) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    require_out(out, "out");
    drift::nmpc::NmpcConfig n = controller_config(c);
    if (fit) n.fit = fit->value;
    if (n.use_envelope) {
      if (table) {
        n.table = table->value;
      } else {
        if (!fit) throw ArgumentError("simulate: a fit or a table is required with the envelope");
        n.table = std::make_shared<drift::envelope::EnvelopeTable>(drift::envelope::build_table(
            c.nmpc_table_vx, c.nmpc_table_mu, c.nmpc.box, *fit->value, c.model,
            c.envelope.options, c.envelope.workers));
      }
    }
    auto sim = std::make_unique<drift_sim>();
    sim->log = drift::sim::run_closed_loop(c.scenario, n, c.model, record_trace != 0);
    sim->metrics = drift::sim::compute_metrics(sim->log);
    *out = sim.release();
  });
}

drift_status drift_sim_write(const drift_sim* sim, const char* out_dir) {
  return guard([&] {
    const auto& s = require(sim, "sim");
    require_out(out_dir, "out_dir");
    drift::io::ensure_directory(out_dir);
    drift::io::write_file(join(out_dir, "sim_log.csv"), drift::io::sim_log_csv(s.log));
    drift::io::write_file(join(out_dir, "solver_log.csv"), drift::io::solver_log_csv(s.log));
    drift::io::write_file(join(out_dir, "phase_trajectory.csv"),
                          drift::io::phase_trajectory_csv(s.log));
    drift::io::write_file(join(out_dir, "metrics.json"), drift::io::metrics_json(s.metrics, s.log));
    if (!s.log.traces.empty())
      drift::io::write_file(join(out_dir, "sqp_trace.csv"), drift::io::trace_log_csv(s.log));
  });
}

drift_status drift_sim_metrics(const drift_sim* sim, drift_metrics* out) {
  return guard([&] {
    const auto& s = require(sim, "sim");
    require_out(out, "out");
    *out = to_c(s.metrics);
  });
}

drift_status drift_sim_complete(const drift_sim* sim, int* complete) {
  return guard([&] {
    const auto& s = require(sim, "sim");
    require_out(complete, "complete");
    *complete = s.log.complete ? 1 : 0;
  });
}

void drift_sim_free(drift_sim* sim) { delete sim; }

drift_status drift_metrics_from_log(const drift_config* config, const char* csv_path,
                                    const char* json_path, drift_metrics* out) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    require_out(csv_path, "csv_path");
    const drift::nmpc::NmpcConfig n = controller_config(c);
    const auto ref = drift::nmpc::compute_reference(c.scenario.radius, c.scenario.speed,
                                                    c.scenario.design_mu, c.model, n);
    const auto log = drift::io::sim_log_from_csv(drift::io::read_csv(csv_path), c.scenario, ref);
    const auto m = drift::sim::compute_metrics(log);
    if (json_path) drift::io::write_file(json_path, drift::io::metrics_json(m, log));
    if (out) *out = to_c(m);
  });
}

drift_status drift_torque_allocation(const drift_config* config, const double u[3],
                                     double torques[4]) {
  return guard([&] {
    const auto& c = require(config, "config").value;
    require_out(u, "u");
    require_out(torques, "torques");
    const drift::vehicle::InputVec v(u[0], u[1], u[2]);
    const auto t = drift::nmpc::torque_allocation(v, c.model.vehicle);
    torques[0] = t.fl;
    torques[1] = t.fr;
    torques[2] = t.rl;
    torques[3] = t.rr;
  });
}

}  // extern "C"
