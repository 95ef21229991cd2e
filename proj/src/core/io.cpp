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

#include "drift/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "drift/common.hpp"
#include "json.hpp"

namespace drift::io {

namespace {

using Json = nlohmann::ordered_json;

class CsvWriter {
 public:
  explicit CsvWriter(const std::vector<std::string>& header) {
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
  }
  CsvWriter& operator<<(double v) { return field(format_number(v)); }
  CsvWriter& operator<<(int v) { return field(std::to_string(v)); }
  CsvWriter& operator<<(const char* v) { return field(v); }
  CsvWriter& operator<<(const std::string& v) { return field(v); }
  void end_row() {
    os_ << '\n';
    first_ = true;
  }
  std::string str() const { return os_.str(); }

 private:
  CsvWriter& field(const std::string& v) {
    if (!first_) os_ << ',';
    os_ << v;
    first_ = false;
    return *this;
  }
  std::ostringstream os_;
  bool first_ = true;
};

double parse_number(const std::string& s) {
  const char* begin = s.c_str();
  char* end = nullptr;
  const double v = std::strtod(begin, &end);
  if (s.empty() || end != begin + s.size()) throw IoError("csv: not a number: '" + s + "'");
  return v;
}

Json parse_json(const std::string& text, const char* what) {
  try {
    return Json::parse(text);
  } catch (const Json::exception& e) {
    throw IoError(std::string(what) + ": malformed JSON: " + e.what());
  }
}

template <typename F>
auto json_guard(const char* what, F&& body) {
  try {
    return body();
  } catch (const Json::exception& e) {
    throw IoError(std::string(what) + ": unexpected content: " + e.what());
  }
}

Json points_json(const geometry::Polygon& poly) {
  Json a = Json::array();
  for (const geometry::Point& p : poly) a.push_back({p.x, p.y});
  return a;
}

geometry::Polygon points_from(const Json& a) {
  geometry::Polygon poly;
  for (const Json& p : a) poly.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
  return poly;
}

Json domain_json(const saddle::FitDomain& d) {
  return Json{{"mu_min", d.mu_min},       {"mu_max", d.mu_max},       {"vx_min", d.vx_min},
              {"vx_max", d.vx_max},       {"delta_min", d.delta_min}, {"delta_max", d.delta_max},
              {"dmz_min", d.dmz_min},     {"dmz_max", d.dmz_max}};
}

saddle::FitDomain domain_from(const Json& j) {
  saddle::FitDomain d;
  d.mu_min = j.at("mu_min").get<double>();
  d.mu_max = j.at("mu_max").get<double>();
  d.vx_min = j.at("vx_min").get<double>();
  d.vx_max = j.at("vx_max").get<double>();
  d.delta_min = j.at("delta_min").get<double>();
  d.delta_max = j.at("delta_max").get<double>();
  d.dmz_min = j.at("dmz_min").get<double>();
  d.dmz_max = j.at("dmz_max").get<double>();
  return d;
}

Json units_json() {
  return Json{{"mu", "-"},        {"vx", "m/s"},    {"delta", "rad"}, {"dmz", "N m"},
              {"beta", "rad"},    {"r", "rad/s"},   {"alpha_sat", "rad"}};
}

Json box_json(const envelope::InputBox& b) {
  return Json{{"delta_min", b.delta_min},
              {"delta_max", b.delta_max},
              {"dmz_min", b.dmz_min},
              {"dmz_max", b.dmz_max}};
}

envelope::InputBox box_from(const Json& j) {
  envelope::InputBox b;
  b.delta_min = j.at("delta_min").get<double>();
  b.delta_max = j.at("delta_max").get<double>();
  b.dmz_min = j.at("dmz_min").get<double>();
  b.dmz_max = j.at("dmz_max").get<double>();
  return b;
}

Json saddle_json(const envelope::Saddle& s) {
  return Json{{"beta", s.beta}, {"r", s.r}, {"delta", s.delta}, {"dmz", s.dmz}};
}

envelope::Saddle saddle_from(const Json& j) {
  envelope::Saddle s;
  s.beta = j.at("beta").get<double>();
  s.r = j.at("r").get<double>();
  s.delta = j.at("delta").get<double>();
  s.dmz = j.at("dmz").get<double>();
  return s;
}

envelope::BoundaryKind kind_from(const std::string& s) {
  using envelope::BoundaryKind;
  for (BoundaryKind k : {BoundaryKind::kFrontSat, BoundaryKind::kRearSat,
                         BoundaryKind::kYawRateMax, BoundaryKind::kRecoverable})
    if (s == envelope::to_string(k)) return k;
  throw IoError("envelope table: unknown boundary kind '" + s + "'");
}

Json boundary_json(const envelope::EnvelopeBoundary& b) {
  return Json{{"kind", envelope::to_string(b.kind)},
              {"slope", b.slope},
              {"intercept", b.intercept},
              {"admissible_sign", b.admissible_sign},
              {"is_void", b.is_void},
              {"polyline", points_json(b.polyline)}};
}

envelope::EnvelopeBoundary boundary_from(const Json& j) {
  envelope::EnvelopeBoundary b;
  b.kind = kind_from(j.at("kind").get<std::string>());
  b.slope = j.at("slope").get<double>();
  b.intercept = j.at("intercept").get<double>();
  b.admissible_sign = j.at("admissible_sign").get<int>();
  b.is_void = j.at("is_void").get<bool>();
  b.polyline = points_from(j.at("polyline"));
  return b;
}

nmpc::CommandStatus command_status_from(const std::string& s) {
  using nmpc::CommandStatus;
  for (CommandStatus c : {CommandStatus::kConverged, CommandStatus::kDegraded, CommandStatus::kHeld})
    if (s == nmpc::to_string(c)) return c;
  throw IoError("sim log: unknown status '" + s + "'");
}

}  // namespace

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failed: " + path);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read " + path);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

void ensure_directory(const std::string& path) {
  std::error_code ec;
  std::filesystem::create_directories(path, ec);
  if (ec || !std::filesystem::is_directory(path))
    throw IoError("cannot create directory " + path + (ec ? ": " + ec.message() : ""));
}

std::size_t CsvTable::column(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return i;
  throw IoError("csv: missing column '" + name + "'");
}

std::vector<double> CsvTable::numbers(const std::string& name) const {
  const std::size_t c = column(name);
  std::vector<double> out;
  out.reserve(rows.size());
  for (const auto& row : rows) out.push_back(parse_number(row[c]));
  return out;
}

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string field;
    std::istringstream ls(line);
    while (std::getline(ls, field, ',')) fields.push_back(field);
    if (line.back() == ',') fields.emplace_back();
    if (first) {
      t.header = std::move(fields);
      first = false;
    } else {
      if (fields.size() != t.header.size())
        throw IoError("csv: row " + std::to_string(t.rows.size() + 1) + " has " +
                      std::to_string(fields.size()) + " fields, expected " +
                      std::to_string(t.header.size()));
      t.rows.push_back(std::move(fields));
    }
  }
  if (first) throw IoError("csv: missing header");
  return t;
}

CsvTable read_csv(const std::string& path) { return parse_csv(read_file(path)); }

const std::vector<std::string>& sim_log_columns() {
  static const std::vector<std::string> columns{
      "t",   "e",   "dpsi", "vx",  "beta", "r",       "delta",   "fxr",
      "dmz", "tfl", "tfr",  "trl", "trr",  "d_inner", "d_outer", "status"};
  return columns;
}

std::string sim_log_csv(const sim::SimLog& log) {
  CsvWriter w(sim_log_columns());
  for (const sim::SimRecord& rec : log.records) {
    w << rec.t;
    for (int i = 0; i < 5; ++i) w << rec.x(i);
    const vehicle::InputVec u = rec.commanded ? rec.command.u : vehicle::InputVec::Zero();
    const nmpc::WheelTorques tq = rec.commanded ? rec.command.torques : nmpc::WheelTorques{};
    w << u(0) << u(1) << u(2) << tq.fl << tq.fr << tq.rl << tq.rr;
    w << rec.d_inner << rec.d_outer;
    w << (rec.commanded ? nmpc::to_string(rec.command.status) : "none");
    w.end_row();
  }
  return w.str();
}

sim::SimLog sim_log_from_csv(const CsvTable& table, const sim::Scenario& scenario,
                             const nmpc::DriftReference& reference) {
  std::vector<std::vector<double>> cols;
  const auto& names = sim_log_columns();
  for (std::size_t i = 0; i + 1 < names.size(); ++i) cols.push_back(table.numbers(names[i]));
  const std::size_t status_col = table.column("status");

  sim::SimLog log;
  log.scenario = scenario;
  log.reference = reference;
  for (std::size_t k = 0; k < table.rows.size(); ++k) {
    sim::SimRecord rec;
    rec.t = cols[0][k];
    for (int i = 0; i < 5; ++i) rec.x(i) = cols[1 + i][k];
    rec.x_ref = reference.state();
    rec.command.u << cols[6][k], cols[7][k], cols[8][k];
    rec.command.torques = {cols[9][k], cols[10][k], cols[11][k], cols[12][k]};
    rec.d_inner = cols[13][k];
    rec.d_outer = cols[14][k];
    const std::string& status = table.rows[k][status_col];
    rec.commanded = status != "none";
    if (rec.commanded) rec.command.status = command_status_from(status);
    log.records.push_back(rec);
  }
  const double t_end = log.records.empty() ? -1.0 : log.records.back().t;
  log.complete = t_end + 1e-9 >= scenario.duration;
  if (!log.complete) log.failure = "time history ends before the scenario duration";
  return log;
}

std::string solver_log_csv(const sim::SimLog& log) {
  CsvWriter w({"t", "status", "solver_status", "iterations", "objective", "violation",
               "envelope_fallback"});
  for (const sim::SimRecord& rec : log.records) {
    if (!rec.commanded) continue;
    const nmpc::ControlCommand& c = rec.command;
    w << rec.t << nmpc::to_string(c.status) << sqp::to_string(c.solver_status) << c.iterations
      << c.objective << c.violation << (c.envelope_fallback ? 1 : 0);
    w.end_row();
  }
  return w.str();
}

std::string trace_log_csv(const sim::SimLog& log) {
  CsvWriter w({"step", "t", "iteration", "objective", "merit_before", "merit_after", "violation",
               "kkt", "step_norm", "penalty", "regularization", "elastic", "hessian_reset"});
  for (std::size_t k = 0; k < log.traces.size() && k < log.records.size(); ++k) {
    for (const sqp::TraceRow& r : log.traces[k]) {
      w << static_cast<int>(k) << log.records[k].t << r.iteration << r.objective
        << r.merit_before << r.merit_after << r.violation << r.kkt << r.step << r.penalty
        << r.regularization << (r.elastic ? 1 : 0) << (r.hessian_reset ? 1 : 0);
      w.end_row();
    }
  }
  return w.str();
}

std::string phase_trajectory_csv(const sim::SimLog& log) {
  CsvWriter w({"t", "beta", "r", "beta_ref", "r_ref"});
  for (const sim::SimRecord& rec : log.records) {
    w << rec.t << rec.x(vehicle::kBeta) << rec.x(vehicle::kYawRate)
      << rec.x_ref(vehicle::kBeta) << rec.x_ref(vehicle::kYawRate);
    w.end_row();
  }
  return w.str();
}

std::string equilibria_csv(const std::vector<equilibrium::Equilibrium>& eqs) {
  CsvWriter w({"beta", "r", "stability", "tire_case", "degenerate", "trace", "det", "eig1_re",
               "eig1_im", "eig2_re", "eig2_im", "front_stiffness", "rear_stiffness", "alpha_f",
               "alpha_r", "residual"});
  for (const equilibrium::Equilibrium& e : eqs) {
    const equilibrium::Classification& c = e.classification;
    w << e.beta << e.r << equilibrium::to_string(c.stability) << equilibrium::to_string(c.tire_case)
      << (c.degenerate ? 1 : 0) << c.trace << c.det << c.eigenvalues[0].real()
      << c.eigenvalues[0].imag() << c.eigenvalues[1].real() << c.eigenvalues[1].imag()
      << e.front_stiffness << e.rear_stiffness << e.alpha_f << e.alpha_r << e.residual;
    w.end_row();
  }
  return w.str();
}

std::string handling_diagram_csv(const equilibrium::HandlingDiagram& d) {
  CsvWriter w({"case", "ay_over_g", "alpha_f", "alpha_r", "slip_difference"});
  for (const equilibrium::HandlingBranch& b : d.branches) {
    for (const equilibrium::HandlingPoint& p : b.points) {
      w << equilibrium::to_string(b.tire_case) << p.ay_over_g << p.alpha_f << p.alpha_r
        << p.slip_difference;
      w.end_row();
    }
  }
  return w.str();
}

std::string handling_intersections_csv(const equilibrium::HandlingDiagram& d) {
  CsvWriter w({"case", "ay_over_g", "alpha_f", "alpha_r", "slip_difference", "beta", "r"});
  for (const equilibrium::HandlingIntersection& x : d.intersections) {
    w << equilibrium::to_string(x.tire_case) << x.point.ay_over_g << x.point.alpha_f
      << x.point.alpha_r << x.point.slip_difference << x.beta << x.r;
    w.end_row();
  }
  return w.str();
}

std::string envelope_polylines_csv(const envelope::DualEnvelope& env) {
  CsvWriter w({"polyline", "vertex", "beta", "r"});
  const auto emit = [&](const char* name, const geometry::Polygon& poly) {
    for (std::size_t i = 0; i < poly.size(); ++i) {
      w << name << static_cast<int>(i) << poly[i].x << poly[i].y;
      w.end_row();
    }
  };
  emit("inner", env.inner);
  emit("outer", env.outer);
  emit("front_sat", env.front.polyline);
  emit("rear_sat", env.rear.polyline);
  emit("yaw_rate_max", env.yaw.polyline);
  emit("recoverable_left", env.recoverable_left);
  emit("recoverable_right", env.recoverable_right);
  if (!env.is_void) {
    emit("saddle_left", {{env.left_saddle.beta, env.left_saddle.r}});
    emit("saddle_right", {{env.right_saddle.beta, env.right_saddle.r}});
  }
  return w.str();
}

std::string dataset_json(const saddle::SaddleDataset& data) {
  Json rows = Json::array();
  for (const saddle::SaddleSample& s : data.rows)
    rows.push_back(Json{{"mu", s.mu},
                        {"vx", s.vx},
                        {"delta", s.delta},
                        {"dmz", s.dmz},
                        {"branch", s.branch},
                        {"beta", s.beta},
                        {"r", s.r}});
  Json sat = Json::array();
  for (const saddle::SaturationSample& s : data.saturation)
    sat.push_back(Json{{"mu", s.mu}, {"alpha_sat", s.alpha_sat}});
  const Json j{{"units", units_json()},
               {"fit_domain", domain_json(data.domain)},
               {"cells", data.cells},
               {"cells_without_saddle", data.cells_without_saddle},
               {"rows", rows},
               {"saturation", sat}};
  return j.dump(2) + "\n";
}

saddle::SaddleDataset dataset_from_json(const std::string& text) {
  const Json j = parse_json(text, "saddle dataset");
  return json_guard("saddle dataset", [&] {
    saddle::SaddleDataset d;
    d.domain = domain_from(j.at("fit_domain"));
    d.cells = j.at("cells").get<int>();
    d.cells_without_saddle = j.at("cells_without_saddle").get<int>();
    for (const Json& r : j.at("rows")) {
      saddle::SaddleSample s;
      s.mu = r.at("mu").get<double>();
      s.vx = r.at("vx").get<double>();
      s.delta = r.at("delta").get<double>();
      s.dmz = r.at("dmz").get<double>();
      s.branch = r.at("branch").get<int>();
      s.beta = r.at("beta").get<double>();
      s.r = r.at("r").get<double>();
      d.rows.push_back(s);
    }
    for (const Json& r : j.at("saturation"))
      d.saturation.push_back({r.at("mu").get<double>(), r.at("alpha_sat").get<double>()});
    return d;
  });
}

std::string fit_json(const saddle::SaddleFit& fit) {
  const Json j{{"units", units_json()},
               {"fit_domain", domain_json(fit.domain)},
               {"parameters", std::vector<double>(fit.p.begin(), fit.p.end())},
               {"lf", fit.lf},
               {"gravity", fit.gravity},
               {"rms_beta", fit.rms_beta},
               {"rms_r", fit.rms_r},
               {"cost", fit.cost},
               {"seed_costs", fit.seed_costs},
               {"converged", fit.converged},
               {"rows", fit.rows}};
  return j.dump(2) + "\n";
}

saddle::SaddleFit fit_from_json(const std::string& text) {
  const Json j = parse_json(text, "saddle fit");
  return json_guard("saddle fit", [&] {
    saddle::SaddleFit f;
    f.domain = domain_from(j.at("fit_domain"));
    const auto p = j.at("parameters").get<std::vector<double>>();
    if (p.size() != f.p.size()) throw IoError("saddle fit: expected 12 parameters");
    std::copy(p.begin(), p.end(), f.p.begin());
    f.lf = j.at("lf").get<double>();
    f.gravity = j.at("gravity").get<double>();
    f.rms_beta = j.at("rms_beta").get<double>();
    f.rms_r = j.at("rms_r").get<double>();
    f.cost = j.at("cost").get<double>();
    f.seed_costs = j.at("seed_costs").get<std::vector<double>>();
    f.converged = j.at("converged").get<bool>();
    f.rows = j.at("rows").get<int>();
    return f;
  });
}

std::string table_json(const envelope::EnvelopeTable& table,
                       const envelope::EnvelopeOptions& options) {
  Json cells = Json::array();
  for (const envelope::DualEnvelope& c : table.cells) {
    Json samples = points_json(c.recoverable_samples);
    cells.push_back(Json{{"vx", c.vx},
                         {"mu", c.mu},
                         {"box", box_json(c.box)},
                         {"is_void", c.is_void},
                         {"cell_width", c.cell_width},
                         {"left_saddle", saddle_json(c.left_saddle)},
                         {"right_saddle", saddle_json(c.right_saddle)},
                         {"inner", points_json(c.inner)},
                         {"outer", points_json(c.outer)},
                         {"front", boundary_json(c.front)},
                         {"rear", boundary_json(c.rear)},
                         {"yaw", boundary_json(c.yaw)},
                         {"recoverable_left", points_json(c.recoverable_left)},
                         {"recoverable_right", points_json(c.recoverable_right)},
                         {"recoverable_samples", samples}});
  }
  const Json j{{"metadata",
                {{"format", "drift-envelope-table"},
                 {"version", 1},
                 {"grid", options.grid},
                 {"window_beta", options.window_beta},
                 {"window_r", options.window_r},
                 {"simplify_cells", options.simplify_cells}}},
               {"units", {{"vx", "m/s"}, {"beta", "rad"}, {"r", "rad/s"}, {"dmz", "N m"}}},
               {"vx", table.vx},
               {"mu", table.mu},
               {"box", box_json(table.box)},
               {"cells", cells}};
  return j.dump(2) + "\n";
}

envelope::EnvelopeTable table_from_json(const std::string& text) {
  const Json j = parse_json(text, "envelope table");
  return json_guard("envelope table", [&] {
    envelope::EnvelopeTable t;
    t.vx = j.at("vx").get<std::vector<double>>();
    t.mu = j.at("mu").get<std::vector<double>>();
    t.box = box_from(j.at("box"));
    for (const Json& c : j.at("cells")) {
      envelope::DualEnvelope e;
      e.vx = c.at("vx").get<double>();
      e.mu = c.at("mu").get<double>();
      e.box = box_from(c.at("box"));
      e.is_void = c.at("is_void").get<bool>();
      e.cell_width = c.at("cell_width").get<double>();
      e.left_saddle = saddle_from(c.at("left_saddle"));
      e.right_saddle = saddle_from(c.at("right_saddle"));
      e.inner = points_from(c.at("inner"));
      e.outer = points_from(c.at("outer"));
      e.front = boundary_from(c.at("front"));
      e.rear = boundary_from(c.at("rear"));
      e.yaw = boundary_from(c.at("yaw"));
      e.recoverable_left = points_from(c.at("recoverable_left"));
      e.recoverable_right = points_from(c.at("recoverable_right"));
      e.recoverable_samples = points_from(c.at("recoverable_samples"));
      t.cells.push_back(std::move(e));
    }
    if (t.vx.empty() || t.mu.empty() || t.cells.size() != t.vx.size() * t.mu.size())
      throw IoError("envelope table: cell count does not match the axes");
    return t;
  });
}

std::string metrics_json(const sim::Metrics& m, const sim::SimLog& log) {
  const sim::Scenario& sc = log.scenario;
  const nmpc::DriftReference& ref = log.reference;
  const Json j{
      {"units",
       {{"speed_error", "m/s"},
        {"beta_error", "rad"},
        {"yaw_rate_error", "rad/s"},
        {"peak_lateral_error", "m"},
        {"settling_time", "s"}}},
      {"scenario",
       {{"plant_mu", sc.plant_mu},
        {"design_mu", sc.design_mu},
        {"radius", sc.radius},
        {"speed", sc.speed},
        {"duration", sc.duration},
        {"dt", sc.dt},
        {"use_envelope", sc.use_envelope}}},
      {"reference", {{"vx", ref.vx}, {"beta", ref.beta}, {"r", ref.r}}},
      {"speed_error", m.speed_error},
      {"beta_error", m.beta_error},
      {"yaw_rate_error", m.yaw_rate_error},
      {"peak_lateral_error", m.peak_lateral_error},
      {"envelope_violations", m.envelope_violations},
      {"settling_time", m.settling_time},
      {"partial", m.partial},
      {"degraded_steps", m.degraded_steps},
      {"held_steps", m.held_steps},
      {"complete", log.complete},
      {"failure", log.failure}};
  return j.dump(2) + "\n";
}

}  // namespace drift::io
