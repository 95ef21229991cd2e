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

// Parametric saddle-location model and its identification.
//
//   r_s1    = ( mu g / Vx + f1) f3,     r_s2 = (-mu g / Vx + f1) f3
//   beta_s1 = (-lf r_s1 / Vx + (-|a_sat| + delta) f2) f4
//   beta_s2 = (-lf r_s2 / Vx + ( |a_sat| + delta) f2) f4
//   a_sat = p1 mu + p2,  f1 = p3 delta / mu,  f2 = p4 + p5 delta mu + p6 Vx
//   f3 = 1 - (dMz / (mu p7 (1 - (p8 Vx + p9))))^2
//   f4 = 1 - (dMz / (mu p10 (1 - (p11 Vx + p12))))^2
//
// Only p7 (1 - p9) and p7 p8 enter f3 (likewise p10..p12 for f4), so the fit
// works with those combinations and reports p9 = p12 = 0.

#ifndef DRIFT_SADDLE_FIT_HPP_
#define DRIFT_SADDLE_FIT_HPP_

#include <array>
#include <cstdint>
#include <vector>

#include "drift/equilibrium.hpp"

namespace drift::saddle {

struct FitDomain {
  double mu_min = 0.3;
  double mu_max = 1.0;
  double vx_min = 20.0 / 3.6;  // [m/s]
  double vx_max = 90.0 / 3.6;  // [m/s]
  double delta_min = -0.5;
  double delta_max = 0.5;
  double dmz_min = -3500.0;
  double dmz_max = 3500.0;

  bool contains(double mu, double vx, double delta, double dmz) const;
};

struct SaddleSample {
  double mu = 0.0;
  double vx = 0.0;
  double delta = 0.0;
  double dmz = 0.0;
  int branch = 1;  // 1: r > 0 saddle, 2: r < 0 saddle
  double beta = 0.0;
  double r = 0.0;
};

struct SaturationSample {
  double mu = 0.0;
  double alpha_sat = 0.0;  // front axle [rad]
};

struct SaddleDataset {
  FitDomain domain;
  std::vector<SaddleSample> rows;
  std::vector<SaturationSample> saturation;
  int cells = 0;
  int cells_without_saddle = 0;
};

struct GridSpec {
  std::vector<double> mu;
  std::vector<double> vx;
  std::vector<double> delta;
  std::vector<double> dmz;

  // 5 x 5 x 9 x 9 = 2025 cells spanning the default fit domain.
  static GridSpec default_grid();
  std::size_t size() const { return mu.size() * vx.size() * delta.size() * dmz.size(); }
};

// Saddle roots (Det J < 0) of every grid cell; cells are independent and
// processed on `workers` threads.
SaddleDataset locate_saddles_grid(const GridSpec& grid, const equilibrium::Model& model,
                                  const FitDomain& domain = {}, unsigned workers = 0);

using Parameters = std::array<double, 12>;

struct SaddleFit {
  Parameters p{};
  FitDomain domain;
  double lf = 1.345;
  double gravity = 9.81;
  double rms_beta = 0.0;  // [rad]
  double rms_r = 0.0;     // [rad/s]
  double cost = 0.0;      // normalized sum of squares of the selected seed
  std::vector<double> seed_costs;
  bool converged = false;  // false: best-so-far after the iteration cap
  int rows = 0;
};

struct SaddlePrediction {
  double beta_s1 = 0.0;
  double r_s1 = 0.0;
  double beta_s2 = 0.0;
  double r_s2 = 0.0;
  bool s1_exists = false;
  bool s2_exists = false;
  double f1 = 0.0, f2 = 0.0, f3 = 0.0, f4 = 0.0;
  double alpha_sat = 0.0;
};

SaddlePrediction evaluate_parameters(const Parameters& p, double lf, double gravity, double mu,
                                     double vx, double delta, double dmz);

// Throws DomainError outside the fit domain.
SaddlePrediction eval_saddle_model(const SaddleFit& fit, double mu, double vx, double delta,
                                   double dmz);

// Gauge-fixed parameters: p7 > 0, p9 = 0 (likewise p10 > 0, p12 = 0) with
// identical predictions.
Parameters canonical_parameters(const Parameters& p);

struct FitOptions {
  int seeds = 10;
  int max_iterations = 200;
  std::uint64_t seed = 20260417;
};

// Throws ConfigError for datasets that cannot identify the model.
SaddleFit fit_saddle_model(const SaddleDataset& data, const vehicle::VehicleParams& vehicle,
                           const FitOptions& options = {});

}  // namespace drift::saddle

#endif  // DRIFT_SADDLE_FIT_HPP_
