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

// Equilibria of the 2DOF (beta, r) field: multi-start Newton search,
// eigenvalue and tire-region classification, and the handling diagram.

#ifndef DRIFT_EQUILIBRIUM_HPP_
#define DRIFT_EQUILIBRIUM_HPP_

#include <array>
#include <complex>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "drift/tire_model.hpp"
#include "drift/vehicle_dynamics.hpp"

namespace drift::equilibrium {

struct Model {
  vehicle::VehicleParams vehicle;
  tire::TireParams tire;
};

struct Conditions {
  double vx = 16.67;  // [m/s]
  double mu = 0.9;
  double delta = 0.0;  // [rad]
  double dmz = 0.0;    // [N m]
};

enum class StabilityClass { kStableNode, kStableFocus, kSaddle, kUnstable };
enum class TireCase { kCase1, kCase2, kCase3, kCase4 };

const char* to_string(StabilityClass c);
const char* to_string(TireCase c);

struct Classification {
  StabilityClass stability = StabilityClass::kUnstable;
  TireCase tire_case = TireCase::kCase1;
  // |Det(J)| within tolerance: the class is reported but not trusted.
  bool degenerate = false;
  // Stability predicted by the tire-region case analysis (critical-speed
  // inequalities for cases 1 and 2).
  bool case_predicts_stable = false;
  double trace = 0.0;
  double det = 0.0;
  std::array<std::complex<double>, 2> eigenvalues{};
};

inline constexpr double kDegenerateDet = 1e-10;

struct Equilibrium {
  double beta = 0.0;
  double r = 0.0;
  Conditions conditions;
  Eigen::Matrix2d jacobian = Eigen::Matrix2d::Zero();
  double front_stiffness = 0.0;  // C*_yf [N/rad]
  double rear_stiffness = 0.0;   // C*_yr [N/rad]
  double alpha_f = 0.0;
  double alpha_r = 0.0;
  double residual = 0.0;  // inf-norm of the field at the root
  Classification classification;
};

// 2DOF field value (beta', r').
Eigen::Vector2d field(double beta, double r, const Conditions& c, const Model& m);

// Jacobian assembled from the tangent stiffnesses at the point's slip angles.
Eigen::Matrix2d jacobian_from_stiffness(double cf, double cr, double vx,
                                        const vehicle::VehicleParams& p);

struct AxleStiffness {
  double front = 0.0;
  double rear = 0.0;
};
AxleStiffness axle_stiffness(double beta, double r, const Conditions& c, const Model& m);

Eigen::Matrix2d jacobian_2dof(double beta, double r, const Conditions& c, const Model& m);

// Central-difference Jacobian of the field.
Eigen::Matrix2d numeric_jacobian(double beta, double r, const Conditions& c, const Model& m,
                                 double step = 1e-6);

// Critical speed sqrt(Cf Cr L^2 / (m (Cr lr - Cf lf))); NaN when undefined.
double critical_speed(double cf, double cr, const vehicle::VehicleParams& p);

Classification classify(const Eigen::Matrix2d& jacobian, double cf, double cr, double vx,
                        const vehicle::VehicleParams& p);

struct SearchOptions {
  int grid_beta = 25;
  int grid_r = 25;
  double beta_limit = 0.6;
  double r_limit = 1.2;
  int max_iterations = 100;
  int max_halvings = 30;
  double step_tolerance = 1e-10;
  double residual_tolerance = 1e-8;
  double dedupe_tolerance = 1e-4;
};

// All distinct roots reached from the multi-start grid, sorted by r.
std::vector<Equilibrium> find_equilibria(const Conditions& c, const Model& m,
                                         const SearchOptions& options = {});

// Damped Newton from one start; nullopt when it fails to converge.
std::optional<Equilibrium> newton_equilibrium(double beta0, double r0, const Conditions& c,
                                              const Model& m, const SearchOptions& options = {});

struct HandlingPoint {
  double ay_over_g = 0.0;
  double alpha_f = 0.0;
  double alpha_r = 0.0;
  double slip_difference = 0.0;  // alpha_f - alpha_r
};

struct HandlingBranch {
  TireCase tire_case = TireCase::kCase1;
  std::vector<HandlingPoint> points;
};

struct HandlingIntersection {
  TireCase tire_case = TireCase::kCase1;
  HandlingPoint point;
  double beta = 0.0;
  double r = 0.0;
};

struct HandlingDiagram {
  Conditions conditions;
  // Operating line a_y/g = gain * (delta + alpha_f - alpha_r).
  double line_gain = 0.0;
  std::vector<HandlingBranch> branches;  // one per tire case
  std::vector<HandlingIntersection> intersections;
};

// Sweeps a_y/g over [-mu, mu] with `levels` samples; lateral-acceleration
// levels beyond an axle's peak force yield no point on that axle.
HandlingDiagram handling_diagram(const Conditions& c, const Model& m, int levels = 2001);

}  // namespace drift::equilibrium

#endif  // DRIFT_EQUILIBRIUM_HPP_
