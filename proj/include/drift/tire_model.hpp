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

// Combined-slip axle force model with an exponential resultant-shear law.
//
// The normalized slips are
//   phi_x = Kx s / (mu_x Fz),   phi_y = Ky tan(alpha) / (mu_y Fz),
//   phi   = sqrt((lambda_d phi_x)^2 + phi_y^2),
// the resultant shear is F = 1 - exp(-phi - E phi^2 - (E^2 + 1/12) phi^3)
// and it is projected onto the slip direction. The lateral channel carries a
// smooth post-peak decay D(phi) = 1 - c_d phi^2 / (w^2 + phi^2), which gives
// |Fy(alpha)| a unique interior maximum and a declining branch that tends to
// (1 - c_d) of the saturated level.
//
// Sign convention: Fy opposes the slip angle (Fy < 0 for alpha > 0), so the
// tangent stiffness dFy/dalpha is negative in the rising region.

#ifndef DRIFT_TIRE_MODEL_HPP_
#define DRIFT_TIRE_MODEL_HPP_

#include <cmath>

#include "drift/autodiff.hpp"
#include "drift/common.hpp"

namespace drift::tire {

struct TireParams {
  double longitudinal_stiffness = 1.2e5;  // Kx [N per unit slip ratio]
  double lateral_stiffness = 1.6e5;       // Ky [N/rad]
  double curvature_factor = 0.1;          // E [-]
  double direction_factor = 1.0;          // lambda_d [-]
  double friction_scale_x = 1.0;          // mu_x = road mu * scale
  double friction_scale_y = 1.0;          // mu_y = road mu * scale
  double post_peak_decay = 0.15;          // c_d [-], asymptotic fractional loss
  double decay_width = 2.0;               // w [-], combined slip of half decay

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct TireState {
  double slip_angle = 0.0;     // alpha [rad]
  double slip_ratio = 0.0;     // s [-]
  double vertical_load = 0.0;  // Fz [N]
  double road_mu = 0.0;        // [-]
};

template <typename T>
struct BasicTireForces {
  T fx{};
  T fy{};
  T normalized_shear{};
};
using TireForces = BasicTireForces<double>;

// Slip ratios are searched on this interval when inverting Fx.
inline constexpr double kSlipRatioMin = -1.0;
inline constexpr double kSlipRatioMax = 1.0;

namespace detail {

inline double one_minus_exp_neg(double a) { return -std::expm1(-a); }

template <typename T>
T one_minus_exp_neg(const T& a) {
  using std::exp;
  return T(1.0) - exp(-a);
}

}  // namespace detail

// Resultant shear F(phi). Throws DomainError for phi < 0.
double normalized_shear(double phi, double curvature_factor);

// Force evaluation without argument validation. `alpha` must satisfy
// |alpha| < pi/2; fz > 0 and mu > 0.
template <typename T>
BasicTireForces<T> combined_forces_unchecked(const T& alpha, const T& slip, double fz,
                                             double mu, const TireParams& p) {
  using std::sqrt;
  using std::tan;
  const double mu_x = mu * p.friction_scale_x;
  const double mu_y = mu * p.friction_scale_y;
  const T phi_x = p.longitudinal_stiffness * slip / (mu_x * fz);
  const T phi_y = p.lateral_stiffness * tan(alpha) / (mu_y * fz);
  const T u = p.direction_factor * phi_x;
  const T phi_sq = u * u + phi_y * phi_y;

  BasicTireForces<T> out;
  if (value_of(phi_sq) < 1e-24) {
    // Linear limit: F/phi -> 1 and D -> 1.
    out.fx = mu_x * fz * u;
    out.fy = -(mu_y * fz) * phi_y;
    out.normalized_shear = T(0.0);
    return out;
  }
  const double e = p.curvature_factor;
  const T phi = sqrt(phi_sq);
  const T exponent = phi + e * phi_sq + (e * e + 1.0 / 12.0) * phi_sq * phi;
  const T shear = detail::one_minus_exp_neg(exponent);
  const double w2 = p.decay_width * p.decay_width;
  const T decay = T(1.0) - p.post_peak_decay * phi_sq / (w2 + phi_sq);
  const T shear_per_phi = shear / phi;
  out.fx = mu_x * fz * shear_per_phi * u;
  out.fy = -(mu_y * fz) * shear_per_phi * decay * phi_y;
  out.normalized_shear = shear;
  return out;
}

// Forces for a validated tire state. Throws DomainError for |alpha| >= pi/2
// or an invalid state.
TireForces combined_forces(const TireState& state, const TireParams& params);

// Pure-cornering lateral force (s = 0).
double lateral_force(double alpha, double fz, double mu, const TireParams& params);

// argmax over alpha > 0 of |Fy(alpha; s = 0)|.
double saturation_angle(double mu, double fz, const TireParams& params);

// dFy/dalpha at `alpha` by central differences (step 1e-5 rad), holding the
// other fields of `state` fixed.
double tangent_stiffness(double alpha, const TireState& state, const TireParams& params);

inline constexpr double kStiffnessStep = 1e-5;

// Slip ratio s in [kSlipRatioMin, kSlipRatioMax] with Fx(s; alpha) equal to
// `target_fx`; saturates at the interval ends when the target is unreachable.
// Fx is monotone in s, so a safeguarded Newton iteration converges to machine
// precision (well inside a 1 N tolerance).
double slip_ratio_for_force(double target_fx, double alpha, double fz, double mu,
                            const TireParams& params);

// dFx/ds at fixed alpha (used for implicit differentiation of the inversion).
double longitudinal_slip_stiffness(double slip, double alpha, double fz, double mu,
                                   const TireParams& params);

// Rear axle under a commanded longitudinal force: solves for the slip ratio
// in plain doubles, then applies one Newton correction in T so derivatives
// follow the implicit function theorem.
template <typename T>
BasicTireForces<T> forces_for_commanded_fx(const T& alpha, const T& target_fx, double fz,
                                           double mu, const TireParams& p) {
  const double a0 = value_of(alpha);
  const double f0 = value_of(target_fx);
  const double s0 = slip_ratio_for_force(f0, a0, fz, mu, p);
  T slip = T(s0);
  if constexpr (!std::is_arithmetic_v<T>) {
    if (s0 > kSlipRatioMin && s0 < kSlipRatioMax) {
      const double dfx_ds = longitudinal_slip_stiffness(s0, a0, fz, mu, p);
      if (dfx_ds > 0.0) {
        const BasicTireForces<T> at_root = combined_forces_unchecked(alpha, T(s0), fz, mu, p);
        slip = T(s0) - (at_root.fx - target_fx) / dfx_ds;
        // Only the derivative part of the correction is wanted.
        slip.value() = s0;
      }
    }
  }
  return combined_forces_unchecked(alpha, slip, fz, mu, p);
}

}  // namespace drift::tire

#endif  // DRIFT_TIRE_MODEL_HPP_
