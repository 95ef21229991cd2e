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

#include "drift/tire_model.hpp"

#include <cmath>
#include <string>

namespace drift::tire {

namespace {

constexpr double kMaxSlipAngle = kPi / 2.0;

void check_state(double alpha, double fz, double mu) {
  if (!std::isfinite(alpha) || std::abs(alpha) >= kMaxSlipAngle)
    throw DomainError("tire: |slip angle| must be below pi/2, got " + std::to_string(alpha));
  if (!(fz > 0.0)) throw DomainError("tire: vertical load must be positive");
  if (!(mu > 0.0 && mu <= 1.2)) throw DomainError("tire: road mu must lie in (0, 1.2]");
}

}  // namespace

void TireParams::validate() const {
  if (!(longitudinal_stiffness > 0.0)) throw ConfigError("tire: Kx must be positive");
  if (!(lateral_stiffness > 0.0)) throw ConfigError("tire: Ky must be positive");
  if (!(direction_factor > 0.0)) throw ConfigError("tire: lambda_d must be positive");
  if (!(curvature_factor >= 0.0)) throw ConfigError("tire: E must be non-negative");
  if (!(friction_scale_x > 0.0 && friction_scale_x <= 1.2) ||
      !(friction_scale_y > 0.0 && friction_scale_y <= 1.2))
    throw ConfigError("tire: friction scales must lie in (0, 1.2]");
  if (!(post_peak_decay >= 0.0 && post_peak_decay < 1.0))
    throw ConfigError("tire: post-peak decay must lie in [0, 1)");
  if (!(decay_width > 0.0)) throw ConfigError("tire: decay width must be positive");
}

double normalized_shear(double phi, double curvature_factor) {
  if (!(phi >= 0.0)) throw DomainError("normalized_shear: combined slip must be >= 0");
  const double e = curvature_factor;
  return -std::expm1(-(phi + e * phi * phi + (e * e + 1.0 / 12.0) * phi * phi * phi));
}

TireForces combined_forces(const TireState& state, const TireParams& params) {
  check_state(state.slip_angle, state.vertical_load, state.road_mu);
  if (!std::isfinite(state.slip_ratio)) throw DomainError("tire: slip ratio must be finite");
  return combined_forces_unchecked(state.slip_angle, state.slip_ratio, state.vertical_load,
                                   state.road_mu, params);
}

double lateral_force(double alpha, double fz, double mu, const TireParams& params) {
  check_state(alpha, fz, mu);
  return combined_forces_unchecked(alpha, 0.0, fz, mu, params).fy;
}

double saturation_angle(double mu, double fz, const TireParams& params) {
  check_state(0.0, fz, mu);
  // |Fy| is unimodal on (0, pi/2); 1.3 rad is far past the peak for any
  // admissible parameter set.
  return golden_section_max(
      [&](double a) { return -combined_forces_unchecked(a, 0.0, fz, mu, params).fy; }, 0.0,
      1.3, 1e-9);
}

double tangent_stiffness(double alpha, const TireState& state, const TireParams& params) {
  const double h = kStiffnessStep;
  if (!std::isfinite(alpha) || std::abs(alpha) + h >= kMaxSlipAngle)
    throw DomainError("tangent_stiffness: slip angle within one step of the domain edge");
  check_state(alpha, state.vertical_load, state.road_mu);
  const auto fy = [&](double a) {
    return combined_forces_unchecked(a, state.slip_ratio, state.vertical_load, state.road_mu,
                                     params)
        .fy;
  };
  return (fy(alpha + h) - fy(alpha - h)) / (2.0 * h);
}

double longitudinal_slip_stiffness(double slip, double alpha, double fz, double mu,
                                   const TireParams& params) {
  const Eigen::AutoDiffScalar<Eigen::Matrix<double, 1, 1>> s(slip,
                                                               Eigen::Matrix<double, 1, 1>(1.0));
  const decltype(s) a(alpha, Eigen::Matrix<double, 1, 1>(0.0));
  return combined_forces_unchecked(a, s, fz, mu, params).fx.derivatives()(0);
}

double slip_ratio_for_force(double target_fx, double alpha, double fz, double mu,
                            const TireParams& params) {
  check_state(alpha, fz, mu);
  const auto fx = [&](double s) {
    return combined_forces_unchecked(alpha, s, fz, mu, params).fx;
  };
  double lo = kSlipRatioMin, hi = kSlipRatioMax;
  const double f_lo = fx(lo) - target_fx;
  const double f_hi = fx(hi) - target_fx;
  if (f_lo >= 0.0) return lo;
  if (f_hi <= 0.0) return hi;
  if (target_fx == 0.0) return 0.0;

  // Initial guess from the linear limit, then safeguarded Newton.
  double s = std::clamp(target_fx / (params.longitudinal_stiffness * params.direction_factor),
                        lo, hi);
  for (int it = 0; it < 100; ++it) {
    const double f = fx(s) - target_fx;
    if (f == 0.0) return s;
    if (f < 0.0)
      lo = s;
    else
      hi = s;
    const double df = longitudinal_slip_stiffness(s, alpha, fz, mu, params);
    double next = (df > 0.0) ? s - f / df : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - s) <= 1e-15 * (1.0 + std::abs(s)) || hi - lo <= 1e-15) return next;
    s = next;
  }
  return s;
}

}  // namespace drift::tire
