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

// Application configuration: JSON file with sections vehicle, tire,
// analysis, fit, envelope, nmpc and scenario. Every key is optional and
// defaults to the values below; unknown keys are rejected. SI units
// throughout (speeds in m/s, angles in rad).

#ifndef DRIFT_CONFIG_HPP_
#define DRIFT_CONFIG_HPP_

#include <string>
#include <vector>

#include "drift/envelope.hpp"
#include "drift/equilibrium.hpp"
#include "drift/nmpc.hpp"
#include "drift/saddle_fit.hpp"
#include "drift/sim.hpp"

namespace drift::config {

struct AnalysisConfig {
  equilibrium::Conditions conditions{60.0 / 3.6, 0.9, 0.0, 0.0};
  equilibrium::SearchOptions search;
  int handling_levels = 2001;
};

struct FitConfig {
  saddle::GridSpec grid = saddle::GridSpec::default_grid();
  saddle::FitDomain domain;
  saddle::FitOptions options;
  unsigned workers = 0;  // 0: hardware concurrency
};

struct EnvelopeConfig {
  envelope::InputBox box;
  std::vector<double> vx{40.0 / 3.6, 60.0 / 3.6, 80.0 / 3.6};
  std::vector<double> mu{0.5, 0.7, 0.8, 0.9};
  envelope::EnvelopeOptions options;
  unsigned workers = 0;
};

struct Config {
  equilibrium::Model model;
  AnalysisConfig analysis;
  FitConfig fit;
  EnvelopeConfig envelope;
  // Table and fit are attached at run time; design mu and the envelope
  // switch come from the scenario.
  nmpc::NmpcConfig nmpc;
  std::vector<double> nmpc_table_vx{6.0, 7.0, 8.0, 9.0, 10.0, 11.0};
  std::vector<double> nmpc_table_mu{0.5, 0.55, 0.6};
  sim::Scenario scenario;

  void validate() const;  // throws ConfigError
};

// Throws IoError when unreadable, ConfigError on malformed content.
Config load_config(const std::string& path);
Config parse_config(const std::string& json_text);
// Full configuration as pretty-printed JSON (keys in declaration order).
std::string to_json(const Config& config);

}  // namespace drift::config

#endif  // DRIFT_CONFIG_HPP_
