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

// Dual drift envelope in the (beta, r) phase plane under bounded steering
// and yaw-moment inputs, and its (Vx, mu) lookup table.
//
// Left-saddle convention (r > 0); the right branch follows from the odd
// symmetry (beta, r, delta, dMz) -> -(beta, r, delta, dMz).

#ifndef DRIFT_ENVELOPE_HPP_
#define DRIFT_ENVELOPE_HPP_

#include <optional>
#include <vector>

#include "drift/equilibrium.hpp"
#include "drift/geometry.hpp"
#include "drift/saddle_fit.hpp"

namespace drift::envelope {

struct InputBox {
  double delta_min = -0.5;
  double delta_max = 0.5;
  double dmz_min = -3500.0;
  double dmz_max = 3500.0;

  void validate() const;  // throws ConfigError
  // Box of the mirrored (right) branch.
  InputBox mirrored() const { return {-delta_max, -delta_min, -dmz_max, -dmz_min}; }
  bool contains(const InputBox& other) const;
};

enum class BoundaryKind { kFrontSat, kRearSat, kYawRateMax, kRecoverable };
const char* to_string(BoundaryKind k);

// Straight boundary beta = slope * r + intercept (saturation lines) or
// r = intercept (yaw-rate lines, slope unused).
struct EnvelopeBoundary {
  BoundaryKind kind = BoundaryKind::kFrontSat;
  double slope = 0.0;
  double intercept = 0.0;
  // +1: admissible side is beta >= line (r >= line for yaw); -1: the opposite.
  int admissible_sign = 1;
  bool is_void = false;
  geometry::Polygon polyline;  // ordered (beta, r) vertices
  // Signed value, positive on the admissible side.
  double value(double beta, double r) const;
};

// Left branch (r > 0) boundaries; mirrored lines come from `mirror`.
EnvelopeBoundary front_sat_boundary(double vx, double mu, const InputBox& box,
                                    const equilibrium::Model& model);
EnvelopeBoundary rear_sat_boundary(double vx, double mu, const equilibrium::Model& model);
// Most permissive yaw-rate line over the box; void when f3 <= 0 everywhere.
EnvelopeBoundary yaw_rate_boundary(double vx, double mu, const InputBox& box,
                                   const saddle::SaddleFit& fit);
EnvelopeBoundary mirror(const EnvelopeBoundary& b);

struct RayAngle {
  double ray = 0.0;  // atan2(r - r_a, beta - beta_a), in (-pi, pi]
  double eta = 0.0;  // line angle to the beta axis, in (-pi/2, pi/2]
};
// Throws DomainError for coincident points.
RayAngle eta_a(double beta, double r, double beta_a, double r_a);

struct EtaMax {
  double eta = 0.0;  // (-pi/2, pi/2]
  double r_dot_min = 0.0;
  double beta_dot = 0.0;
  double delta = 0.0;  // minimizing inputs
  double dmz = 0.0;
  double fyf = 0.0;
  double fyr = 0.0;
};

// Minimizes r' over the box: dMz at its lower bound, delta on a 201-point
// grid refined by golden section. Throws DomainError when no steering in
// the box gives an admissible front slip angle.
EtaMax eta_max(double beta, double r, double vx, double mu, const InputBox& box,
               const equilibrium::Model& model);

struct RecoverabilityIndex {
  double eta_a = 0.0;
  double eta_max = 0.0;
  // Some steering in the box moves beta toward the saddle.
  bool approaching = false;
  // Largest normalized distance of the required r' = beta' (r_a - r) / (beta_a - beta)
  // inside the attainable r' interval over the steering levels; >= 0 when the
  // ray to the saddle lies inside the derivative cone.
  double margin = 0.0;
  bool recoverable = false;  // approaching && margin >= 0
};
RecoverabilityIndex recoverability(double beta, double r, double beta_a, double r_a, double vx,
                                   double mu, const InputBox& box, const equilibrium::Model& model);

struct Saddle {
  double beta = 0.0;
  double r = 0.0;
  double delta = 0.0;  // box input holding the saddle
  double dmz = 0.0;
};

// Left saddle at the extreme box inputs: the Det J < 0 root with the largest
// r > 0 over delta, dMz in {min, 0, max}.
std::optional<Saddle> attached_saddle(double vx, double mu, const InputBox& box,
                                      const equilibrium::Model& model);

struct EnvelopeOptions {
  int grid = 120;
  double window_beta = 0.25;  // recoverability scan half-width around the saddle
  double window_r = 0.5;
  double simplify_cells = 0.25;  // Douglas-Peucker tolerance in cell widths
};

struct DualEnvelope {
  double vx = 0.0;
  double mu = 0.0;
  InputBox box;
  bool is_void = false;
  geometry::Polygon inner;
  geometry::Polygon outer;
  Saddle left_saddle;
  Saddle right_saddle;
  EnvelopeBoundary front;  // left-branch lines
  EnvelopeBoundary rear;
  EnvelopeBoundary yaw;  // clipped to the left saddle's yaw rate
  geometry::Polygon recoverable_left;  // recoverable extension beyond the yaw line
  geometry::Polygon recoverable_right;
  double cell_width = 0.0;
  std::vector<geometry::Point> recoverable_samples;  // left-branch grid nodes marked recoverable

  // Positive outside the inner region.
  geometry::SignedDistance inner_distance(double beta, double r) const;
  // Positive inside the outer region.
  geometry::SignedDistance outer_distance(double beta, double r) const;
};

DualEnvelope build_dual_envelope(double vx, double mu, const InputBox& box,
                                 const saddle::SaddleFit& fit, const equilibrium::Model& model,
                                 const EnvelopeOptions& options = {});

// Recoverable extension (left branch) as a closed polygon.
geometry::Polygon recoverable_region(double vx, double mu, const InputBox& box,
                                     const Saddle& saddle, const saddle::SaddleFit& fit,
                                     const equilibrium::Model& model,
                                     const EnvelopeOptions& options = {});

struct OracleResult {
  int tested = 0;
  int verified = 0;
  double fraction() const { return tested > 0 ? static_cast<double>(verified) / tested : 1.0; }
};

// Forward check of recoverable samples: some constant input on an n x n box
// grid drives the 2DOF model into the saddle ball within the horizon. A miss
// on the coarse grid is retried on the finer one.
struct OracleOptions {
  int inputs_per_axis = 21;
  int refine_inputs_per_axis = 81;  // <= inputs_per_axis: no retry
  double horizon = 3.0;  // [s]
  double dt = 0.005;     // [s]
  double radius = 0.02;
  int max_samples = 0;  // 0: all samples
};
bool reaches_saddle(double beta, double r, const Saddle& saddle, double vx, double mu,
                    const InputBox& box, const equilibrium::Model& model,
                    const OracleOptions& options = {});
OracleResult verify_recoverable(const DualEnvelope& env, const equilibrium::Model& model,
                                const OracleOptions& options = {});

struct EnvelopeTable {
  std::vector<double> vx;  // strictly increasing [m/s]
  std::vector<double> mu;  // strictly increasing
  InputBox box;
  std::vector<DualEnvelope> cells;  // cells[i * mu.size() + j] for (vx[i], mu[j])

  const DualEnvelope& cell(std::size_t i, std::size_t j) const {
    return cells[i * mu.size() + j];
  }
};

EnvelopeTable build_table(const std::vector<double>& vx, const std::vector<double>& mu,
                          const InputBox& box, const saddle::SaddleFit& fit,
                          const equilibrium::Model& model, const EnvelopeOptions& options = {},
                          unsigned workers = 0);

struct TableQuery {
  double inner = 0.0;  // positive outside the inner region
  double outer = 0.0;  // positive inside the outer region
  geometry::Point inner_gradient;  // d inner / d (beta, r)
  geometry::Point outer_gradient;
  double inner_dvx = 0.0;
  double outer_dvx = 0.0;
  bool clamped = false;  // (Vx, mu) outside the table axes
  bool is_void = false;  // no populated neighboring cell
};

// Bilinear blend of the neighboring cells' signed distances; void cells are
// dropped and the remaining weights renormalized.
TableQuery query(const EnvelopeTable& table, double vx, double mu, double beta, double r);

}  // namespace drift::envelope

#endif  // DRIFT_ENVELOPE_HPP_
