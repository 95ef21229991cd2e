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

#include "drift/config.hpp"

#include <array>
#include <cstdint>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>

#include "drift/common.hpp"
#include "json.hpp"

namespace drift::config {

namespace {

using Json = nlohmann::ordered_json;

// Reads the fields named by a visit() function from a JSON object, leaving
// absent keys at their defaults.
class Reader {
 public:
  Reader(const Json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError(where() + ": expected an object");
  }

  void operator()(const char* key, double& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number()) throw ConfigError(where(key) + ": expected a number");
      out = v->get<double>();
    }
  }
  void operator()(const char* key, int& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_integer()) throw ConfigError(where(key) + ": expected an integer");
      out = v->get<int>();
    }
  }
  void operator()(const char* key, unsigned& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + ": expected a nonnegative integer");
      out = v->get<unsigned>();
    }
  }
  void operator()(const char* key, std::uint64_t& out) {
    if (const Json* v = find(key)) {
      if (!v->is_number_unsigned()) throw ConfigError(where(key) + ": expected a nonnegative integer");
      out = v->get<std::uint64_t>();
    }
  }
  void operator()(const char* key, bool& out) {
    if (const Json* v = find(key)) {
      if (!v->is_boolean()) throw ConfigError(where(key) + ": expected a boolean");
      out = v->get<bool>();
    }
  }
  void operator()(const char* key, std::vector<double>& out) {
    if (const Json* v = find(key)) out = numbers(*v, key);
  }
  template <std::size_t N>
  void operator()(const char* key, std::array<double, N>& out) {
    if (const Json* v = find(key)) {
      const std::vector<double> xs = numbers(*v, key);
      if (xs.size() != N)
        throw ConfigError(where(key) + ": expected " + std::to_string(N) + " numbers");
      std::copy(xs.begin(), xs.end(), out.begin());
    }
  }
  void operator()(const char* key, std::optional<vehicle::StateVec>& out) {
    if (const Json* v = find(key)) {
      if (v->is_null()) {
        out.reset();
        return;
      }
      const std::vector<double> xs = numbers(*v, key);
      if (xs.size() != 5) throw ConfigError(where(key) + ": expected [e, dpsi, vx, beta, r]");
      out = vehicle::StateVec(xs.data());
    }
  }
  template <typename F>
  void section(const char* key, F&& body) {
    if (const Json* v = find(key)) {
      Reader sub(*v, where(key));
      body(sub);
      sub.finish();
    }
  }

  void finish() const {
    for (const auto& item : j_.items())
      if (!used_.count(item.key())) throw ConfigError(where(item.key()) + ": unknown key");
  }

 private:
  const Json* find(const char* key) {
    used_.insert(key);
    auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }
  std::vector<double> numbers(const Json& v, const char* key) const {
    if (!v.is_array()) throw ConfigError(where(key) + ": expected an array of numbers");
    std::vector<double> out;
    for (const Json& x : v) {
      if (!x.is_number()) throw ConfigError(where(key) + ": expected an array of numbers");
      out.push_back(x.get<double>());
    }
    return out;
  }
  std::string where() const { return path_.empty() ? std::string("config") : path_; }
  std::string where(const std::string& key) const {
    return path_.empty() ? key : path_ + "." + key;
  }

  const Json& j_;
  std::string path_;
  std::set<std::string> used_;
};

class Writer {
 public:
  template <typename T>
  void operator()(const char* key, const T& value) {
    j[key] = value;
  }
  template <std::size_t N>
  void operator()(const char* key, const std::array<double, N>& value) {
    j[key] = std::vector<double>(value.begin(), value.end());
  }
  void operator()(const char* key, const std::optional<vehicle::StateVec>& value) {
    if (value)
      j[key] = std::vector<double>(value->data(), value->data() + value->size());
    else
      j[key] = nullptr;
  }
  template <typename F>
  void section(const char* key, F&& body) {
    Writer sub;
    body(sub);
    j[key] = std::move(sub.j);
  }

  Json j = Json::object();
};

template <typename V>
void visit(V& v, vehicle::VehicleParams& p) {
  v("mass", p.mass);
  v("yaw_inertia", p.yaw_inertia);
  v("lf", p.lf);
  v("lr", p.lr);
  v("wheelbase", p.wheelbase);
  v("track", p.track);
  v("wheel_radius", p.wheel_radius);
  v("gravity", p.gravity);
}

template <typename V>
void visit(V& v, tire::TireParams& p) {
  v("longitudinal_stiffness", p.longitudinal_stiffness);
  v("lateral_stiffness", p.lateral_stiffness);
  v("curvature_factor", p.curvature_factor);
  v("direction_factor", p.direction_factor);
  v("friction_scale_x", p.friction_scale_x);
  v("friction_scale_y", p.friction_scale_y);
  v("post_peak_decay", p.post_peak_decay);
  v("decay_width", p.decay_width);
}

template <typename V>
void visit(V& v, envelope::InputBox& b) {
  v("delta_min", b.delta_min);
  v("delta_max", b.delta_max);
  v("dmz_min", b.dmz_min);
  v("dmz_max", b.dmz_max);
}

template <typename V>
void visit(V& v, AnalysisConfig& a) {
  v("vx", a.conditions.vx);
  v("mu", a.conditions.mu);
  v("delta", a.conditions.delta);
  v("dmz", a.conditions.dmz);
  v("handling_levels", a.handling_levels);
  v.section("search", [&](auto& s) {
    s("grid_beta", a.search.grid_beta);
    s("grid_r", a.search.grid_r);
    s("beta_limit", a.search.beta_limit);
    s("r_limit", a.search.r_limit);
    s("max_iterations", a.search.max_iterations);
    s("max_halvings", a.search.max_halvings);
    s("step_tolerance", a.search.step_tolerance);
    s("residual_tolerance", a.search.residual_tolerance);
    s("dedupe_tolerance", a.search.dedupe_tolerance);
  });
}

template <typename V>
void visit(V& v, FitConfig& f) {
  v.section("grid", [&](auto& s) {
    s("mu", f.grid.mu);
    s("vx", f.grid.vx);
    s("delta", f.grid.delta);
    s("dmz", f.grid.dmz);
  });
  v.section("domain", [&](auto& s) {
    s("mu_min", f.domain.mu_min);
    s("mu_max", f.domain.mu_max);
    s("vx_min", f.domain.vx_min);
    s("vx_max", f.domain.vx_max);
    s("delta_min", f.domain.delta_min);
    s("delta_max", f.domain.delta_max);
    s("dmz_min", f.domain.dmz_min);
    s("dmz_max", f.domain.dmz_max);
  });
  v("seeds", f.options.seeds);
  v("max_iterations", f.options.max_iterations);
  v("seed", f.options.seed);
  v("workers", f.workers);
}

template <typename V>
void visit(V& v, EnvelopeConfig& e) {
  v.section("box", [&](auto& s) { visit(s, e.box); });
  v("vx", e.vx);
  v("mu", e.mu);
  v("grid", e.options.grid);
  v("window_beta", e.options.window_beta);
  v("window_r", e.options.window_r);
  v("simplify_cells", e.options.simplify_cells);
  v("workers", e.workers);
}

template <typename V>
void visit(V& v, Config& c) {
  v.section("vehicle", [&](auto& s) { visit(s, c.model.vehicle); });
  v.section("tire", [&](auto& s) { visit(s, c.model.tire); });
  v.section("analysis", [&](auto& s) { visit(s, c.analysis); });
  v.section("fit", [&](auto& s) { visit(s, c.fit); });
  v.section("envelope", [&](auto& s) { visit(s, c.envelope); });
  v.section("nmpc", [&](auto& s) {
    s("np", c.nmpc.np);
    s("nc", c.nmpc.nc);
    s("dt", c.nmpc.dt);
    s("q", c.nmpc.q);
    s("r", c.nmpc.r);
    s.section("box", [&](auto& b) { visit(b, c.nmpc.box); });
    s("w_inner", c.nmpc.w_inner);
    s("input_scale", c.nmpc.input_scale);
    s("cost_scale", c.nmpc.cost_scale);
    s("max_sqp_iterations", c.nmpc.max_sqp_iterations);
    s("table_vx", c.nmpc_table_vx);
    s("table_mu", c.nmpc_table_mu);
  });
  v.section("scenario", [&](auto& s) {
    s("plant_mu", c.scenario.plant_mu);
    s("design_mu", c.scenario.design_mu);
    s("radius", c.scenario.radius);
    s("speed", c.scenario.speed);
    s("duration", c.scenario.duration);
    s("dt", c.scenario.dt);
    s("initial", c.scenario.initial);
    s("use_envelope", c.scenario.use_envelope);
    s("seed", c.scenario.seed);
  });
}

void check_axis(const std::vector<double>& axis, const std::string& name) {
  if (axis.empty()) throw ConfigError(name + ": must not be empty");
  for (std::size_t i = 0; i < axis.size(); ++i) {
    if (!std::isfinite(axis[i])) throw ConfigError(name + ": non-finite value");
    if (i > 0 && !(axis[i] > axis[i - 1])) throw ConfigError(name + ": must be strictly increasing");
  }
}

}  // namespace

void Config::validate() const {
  model.vehicle.validate();
  model.tire.validate();
  if (!(analysis.conditions.vx > 0.0) || !(analysis.conditions.mu > 0.0))
    throw ConfigError("analysis: vx and mu must be positive");
  if (analysis.handling_levels < 2) throw ConfigError("analysis.handling_levels: need at least 2");
  check_axis(fit.grid.mu, "fit.grid.mu");
  check_axis(fit.grid.vx, "fit.grid.vx");
  check_axis(fit.grid.delta, "fit.grid.delta");
  check_axis(fit.grid.dmz, "fit.grid.dmz");
  if (fit.options.seeds <= 0 || fit.options.max_iterations <= 0)
    throw ConfigError("fit: seeds and max_iterations must be positive");
  envelope.box.validate();
  check_axis(envelope.vx, "envelope.vx");
  check_axis(envelope.mu, "envelope.mu");
  if (envelope.options.grid < 8) throw ConfigError("envelope.grid: need at least 8");
  nmpc::NmpcConfig controller = nmpc;
  controller.design_mu = scenario.design_mu;
  controller.use_envelope = false;
  controller.validate();
  check_axis(nmpc_table_vx, "nmpc.table_vx");
  check_axis(nmpc_table_mu, "nmpc.table_mu");
  scenario.validate();
  if (std::abs(scenario.dt - nmpc.dt) > 1e-12)
    throw ConfigError("scenario.dt must match nmpc.dt");
}

Config parse_config(const std::string& json_text) {
  Json j;
  try {
    j = Json::parse(json_text);
  } catch (const Json::parse_error& e) {
    throw ConfigError(std::string("config: malformed JSON: ") + e.what());
  }
  Config c;
  Reader reader(j, "");
  visit(reader, c);
  reader.finish();
  c.nmpc.design_mu = c.scenario.design_mu;
  c.nmpc.use_envelope = c.scenario.use_envelope;
  c.validate();
  return c;
}

Config load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config file " + path);
  std::ostringstream text;
  text << in.rdbuf();
  return parse_config(text.str());
}

std::string to_json(const Config& config) {
  Config copy = config;
  Writer writer;
  visit(writer, copy);
  return writer.j.dump(2) + "\n";
}

}  // namespace drift::config
