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

// drift: command-line front end over the C API.

#include <cstdio>
#include <memory>
#include <optional>
#include <stdexcept>
#include <string>

#include "CLI11.hpp"
#include "drift/drift.h"

namespace {

class Failure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

void check(drift_status s, const char* what) {
  if (s != DRIFT_OK)
    throw Failure(std::string(what) + ": " + drift_status_string(s) + ": " + drift_last_error());
}

template <typename T, void (*Free)(T*)>
struct Deleter {
  void operator()(T* p) const { Free(p); }
};
using ConfigPtr = std::unique_ptr<drift_config, Deleter<drift_config, drift_config_free>>;
using FitPtr = std::unique_ptr<drift_fit, Deleter<drift_fit, drift_fit_free>>;
using TablePtr = std::unique_ptr<drift_table, Deleter<drift_table, drift_table_free>>;
using SimPtr = std::unique_ptr<drift_sim, Deleter<drift_sim, drift_sim_free>>;

std::string number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string join(const std::string& dir, const std::string& name) {
  return dir.empty() || dir.back() == '/' ? dir + name : dir + "/" + name;
}

struct Options {
  std::string config;
  std::string out = "out";
  bool trace = false;
  std::string fit;
  std::string table;
  std::optional<double> vx;
  std::optional<double> mu;
  std::optional<double> plant_mu;
  std::optional<double> design_mu;
  std::optional<double> duration;
  bool no_envelope = false;
  std::string log;
};

ConfigPtr load_config(const Options& o) {
  drift_config* c = nullptr;
  if (o.config.empty())
    check(drift_config_default(&c), "config");
  else
    check(drift_config_load(o.config.c_str(), &c), "config");
  return ConfigPtr(c);
}

FitPtr obtain_fit(const Options& o, const drift_config* config) {
  drift_fit* f = nullptr;
  if (!o.fit.empty())
    check(drift_fit_load(o.fit.c_str(), &f), "fit");
  else
    check(drift_fit_saddle(config, nullptr, &f), "fit-saddle");
  return FitPtr(f);
}

void print_metrics(const drift_metrics& m) {
  std::printf("speed_error %s m/s\n", number(m.speed_error).c_str());
  std::printf("beta_error %s rad\n", number(m.beta_error).c_str());
  std::printf("yaw_rate_error %s rad/s\n", number(m.yaw_rate_error).c_str());
  std::printf("peak_lateral_error %s m\n", number(m.peak_lateral_error).c_str());
  std::printf("envelope_violations %d\n", m.envelope_violations);
  std::printf("settling_time %s s\n", number(m.settling_time).c_str());
  std::printf("partial %d degraded %d held %d\n", m.partial, m.degraded_steps, m.held_steps);
}

void run_equilibria(const Options& o) {
  ConfigPtr config = load_config(o);
  int count = 0;
  check(drift_equilibria(config.get(), o.out.c_str(), &count), "equilibria");
  std::printf("%d equilibria -> %s\n", count, join(o.out, "equilibria.csv").c_str());
}

void run_handling(const Options& o) {
  ConfigPtr config = load_config(o);
  int n = 0;
  check(drift_handling_diagram(config.get(), o.out.c_str(), &n), "handling-diagram");
  std::printf("%d intersections -> %s\n", n, join(o.out, "handling_diagram.csv").c_str());
}

void run_fit(const Options& o) {
  ConfigPtr config = load_config(o);
  drift_fit* f = nullptr;
  check(drift_fit_saddle(config.get(), o.out.c_str(), &f), "fit-saddle");
  FitPtr fit(f);
  double rb = 0.0, rr = 0.0;
  check(drift_fit_rms(fit.get(), &rb, &rr), "fit-saddle");
  std::printf("rms beta %s rad, rms r %s rad/s -> %s\n", number(rb).c_str(), number(rr).c_str(),
              join(o.out, "saddle_fit.json").c_str());
}

void run_envelope(const Options& o) {
  ConfigPtr config = load_config(o);
  FitPtr fit = obtain_fit(o, config.get());
  if (o.vx.has_value() != o.mu.has_value()) throw Failure("envelope: give both --vx and --mu");
  if (o.vx) {
    const std::string path = join(o.out, "envelope_polylines.csv");
    check(drift_envelope_polylines(config.get(), fit.get(), *o.vx, *o.mu, path.c_str()),
          "envelope");
    std::printf("envelope at vx %s m/s, mu %s -> %s\n", number(*o.vx).c_str(),
                number(*o.mu).c_str(), path.c_str());
  }
  if (!o.vx || !o.table.empty()) {
    drift_table* t = nullptr;
    if (o.vx) {
      const double vx = *o.vx;
      const double mu = *o.mu;
      check(drift_table_build(config.get(), fit.get(), &vx, 1, &mu, 1, &t), "envelope");
    } else {
      check(drift_table_build(config.get(), fit.get(), nullptr, 0, nullptr, 0, &t), "envelope");
    }
    TablePtr table(t);
    const std::string path = o.table.empty() ? join(o.out, "envelope_table.json") : o.table;
    check(drift_table_write(table.get(), path.c_str()), "envelope");
    std::printf("envelope table -> %s\n", path.c_str());
  }
}

void run_simulate(const Options& o) {
  ConfigPtr config = load_config(o);
  const auto set = [&](const char* key, const std::string& value) {
    check(drift_config_set(config.get(), key, value.c_str()), "config");
  };
  if (o.plant_mu) set("scenario.plant_mu", number(*o.plant_mu));
  if (o.design_mu) set("scenario.design_mu", number(*o.design_mu));
  if (o.duration) set("scenario.duration", number(*o.duration));
  if (o.no_envelope) set("scenario.use_envelope", "false");

  FitPtr fit;
  TablePtr table;
  if (!o.table.empty()) {
    drift_table* t = nullptr;
    check(drift_table_load(o.table.c_str(), &t), "table");
    table.reset(t);
  }
  if (!o.fit.empty() || (!o.no_envelope && !table)) fit = obtain_fit(o, config.get());

  drift_sim* s = nullptr;
  check(drift_simulate(config.get(), fit.get(), table.get(), o.trace ? 1 : 0, &s), "simulate");
  SimPtr sim(s);
  check(drift_sim_write(sim.get(), o.out.c_str()), "simulate");
  drift_metrics m{};
  check(drift_sim_metrics(sim.get(), &m), "simulate");
  int complete = 0;
  check(drift_sim_complete(sim.get(), &complete), "simulate");
  std::printf("%s -> %s\n", complete ? "complete" : "truncated",
              join(o.out, "sim_log.csv").c_str());
  print_metrics(m);
}

void run_metrics(const Options& o) {
  ConfigPtr config = load_config(o);
  const std::string log = o.log.empty() ? join(o.out, "sim_log.csv") : o.log;
  const std::string json = join(o.out, "metrics.json");
  drift_metrics m{};
  check(drift_metrics_from_log(config.get(), log.c_str(), json.c_str(), &m), "metrics");
  std::printf("metrics of %s -> %s\n", log.c_str(), json.c_str());
  print_metrics(m);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Drift stability envelopes and envelope-constrained drift NMPC"};
  app.require_subcommand(1);
  Options o;
  app.add_option("--config", o.config, "JSON configuration file (defaults when omitted)");
  app.add_option("--out", o.out, "Output directory")->capture_default_str();
  app.add_flag("--trace", o.trace, "Write per-step SQP iteration traces (simulate)");

  auto* eq = app.add_subcommand("equilibria", "Equilibria of the 2DOF model");
  auto* hd = app.add_subcommand("handling-diagram", "Handling diagram branches");
  auto* fs = app.add_subcommand("fit-saddle", "Saddle dataset and fitted saddle model");
  auto* env = app.add_subcommand("envelope", "Dual stability envelope or envelope table");
  env->add_option("--fit", o.fit, "Saddle fit JSON (fitted when omitted)");
  env->add_option("--vx", o.vx, "Single envelope speed [m/s]");
  env->add_option("--mu", o.mu, "Single envelope road friction");
  env->add_option("--table", o.table, "Envelope table JSON output path");
  auto* sim = app.add_subcommand("simulate", "Closed-loop drift simulation");
  sim->add_option("--fit", o.fit, "Saddle fit JSON (fitted when omitted)");
  sim->add_option("--table", o.table, "Envelope table JSON (built when omitted)");
  sim->add_option("--plant-mu", o.plant_mu, "Plant road friction");
  sim->add_option("--design-mu", o.design_mu, "Controller design friction");
  sim->add_option("--duration", o.duration, "Run length [s]");
  sim->add_flag("--no-envelope", o.no_envelope, "Drop the envelope constraints");
  auto* met = app.add_subcommand("metrics", "Metrics of a time-history CSV");
  met->add_option("--log", o.log, "Time-history CSV (default <out>/sim_log.csv)");
  for (auto* sub : {eq, hd, fs, env, sim, met}) sub->fallthrough();

  CLI11_PARSE(app, argc, argv);

  try {
    if (eq->parsed()) run_equilibria(o);
    if (hd->parsed()) run_handling(o);
    if (fs->parsed()) run_fit(o);
    if (env->parsed()) run_envelope(o);
    if (sim->parsed()) run_simulate(o);
    if (met->parsed()) run_metrics(o);
  } catch (const Failure& e) {
    std::fprintf(stderr, "drift: %s\n", e.what());
    return 1;
  }
  return 0;
}
