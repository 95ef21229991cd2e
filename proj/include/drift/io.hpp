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

// CSV and JSON export of logs, equilibria, handling diagrams, saddle data
// and envelopes. Numbers are written with 17 significant digits so that a
// re-read reproduces them exactly; field order is fixed.

#ifndef DRIFT_IO_HPP_
#define DRIFT_IO_HPP_

#include <string>
#include <vector>

#include "drift/envelope.hpp"
#include "drift/equilibrium.hpp"
#include "drift/saddle_fit.hpp"
#include "drift/sim.hpp"

namespace drift::io {

std::string format_number(double v);

// Throw IoError on failure.
void write_file(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);
void ensure_directory(const std::string& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Throws IoError when the column is absent or a cell is not a number.
  std::size_t column(const std::string& name) const;
  std::vector<double> numbers(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);  // throws IoError on ragged rows
CsvTable read_csv(const std::string& path);

// Time history: t, e, dpsi, vx, beta, r, delta, fxr, dmz, tfl, tfr, trl, trr,
// d_inner, d_outer, status. Rows without a command carry zero inputs and
// status "none".
const std::vector<std::string>& sim_log_columns();
std::string sim_log_csv(const sim::SimLog& log);
// Rebuilds a log from its time history; the reference state is filled in
// from `reference` and completeness from the scenario duration.
sim::SimLog sim_log_from_csv(const CsvTable& table, const sim::Scenario& scenario,
                             const nmpc::DriftReference& reference);

// Per-step solver diagnostics: t, status, solver_status, iterations,
// objective, violation, envelope_fallback.
std::string solver_log_csv(const sim::SimLog& log);
// SQP iteration traces of every step, prefixed by step and t.
std::string trace_log_csv(const sim::SimLog& log);
// t, beta, r, beta_ref, r_ref.
std::string phase_trajectory_csv(const sim::SimLog& log);

std::string equilibria_csv(const std::vector<equilibrium::Equilibrium>& eqs);
// Branch points: case, ay_over_g, alpha_f, alpha_r, slip_difference.
std::string handling_diagram_csv(const equilibrium::HandlingDiagram& diagram);
std::string handling_intersections_csv(const equilibrium::HandlingDiagram& diagram);

// polyline, vertex, beta, r for the inner and outer regions, the boundary
// lines, the recoverable extensions and the two saddle markers.
std::string envelope_polylines_csv(const envelope::DualEnvelope& env);

std::string dataset_json(const saddle::SaddleDataset& data);
saddle::SaddleDataset dataset_from_json(const std::string& text);
std::string fit_json(const saddle::SaddleFit& fit);
saddle::SaddleFit fit_from_json(const std::string& text);

std::string table_json(const envelope::EnvelopeTable& table,
                       const envelope::EnvelopeOptions& options);
envelope::EnvelopeTable table_from_json(const std::string& text);

std::string metrics_json(const sim::Metrics& metrics, const sim::SimLog& log);

}  // namespace drift::io

#endif  // DRIFT_IO_HPP_
