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

// Single-track vehicle models in the (beta, r) body frame.
//
//   3DOF:  Vx' = (Fxr - Fyf sin(delta)) / m + r Vy
//          beta' = (Fyr + Fyf cos(delta)) / (m Vx) - r
//          r'    = (lf Fyf cos(delta) - lr Fyr + dMz) / Iz
//   Path:  e'    = Vy cos(dpsi) + Vx sin(dpsi)
//          dpsi' = r - kappa s'
//          s'    = (Vx cos(dpsi) - Vy sin(dpsi)) / (1 - kappa e)
//   2DOF:  beta' = (Fyf + Fyr) / (m Vx) - r
//          r'    = (lf Fyf - lr Fyr + dMz) / Iz
//
// with Vy = Vx tan(beta), alpha_f = beta + lf r / Vx - delta and
// alpha_r = beta - lr r / Vx. The full state is x = [e, dpsi, Vx, beta, r]
// and the input u = [delta, Fxr, dMz].

#ifndef DRIFT_VEHICLE_DYNAMICS_HPP_
#define DRIFT_VEHICLE_DYNAMICS_HPP_

#include <cmath>
#include <string>

#include <Eigen/Core>

#include "drift/autodiff.hpp"
#include "drift/common.hpp"
#include "drift/tire_model.hpp"

namespace drift::vehicle {

struct VehicleParams {
  double mass = 1720.0;          // m [kg]
  double yaw_inertia = 1343.1;   // Iz [kg m^2]
  double lf = 1.345;             // CG to front axle [m]
  double lr = 1.358;             // CG to rear axle [m]
  double wheelbase = 2.703;      // L [m]
  double track = 1.66;           // d [m]
  double wheel_radius = 0.32;    // Re [m]
  double gravity = 9.81;         // g [m/s^2]

  // Throws ConfigError when an invariant is violated.
  void validate() const;
};

struct ChassisState {
  double vx = 0.0;    // [m/s]
  double beta = 0.0;  // [rad]
  double r = 0.0;     // [rad/s]
};

struct PathState {
  double e = 0.0;      // signed lateral error [m]
  double dpsi = 0.0;   // heading error [rad]
  double s = 0.0;      // arc length [m]
  double kappa = 0.0;  // path curvature [1/m]
};

struct ControlInput {
  double delta = 0.0;  // front steering angle [rad]
  double fxr = 0.0;    // rear longitudinal force [N]
  double dmz = 0.0;    // additional yaw moment [N m]
};

enum StateIndex { kE = 0, kDpsi = 1, kVx = 2, kBeta = 3, kYawRate = 4 };
enum InputIndex { kDelta = 0, kFxr = 1, kDmz = 2 };

template <typename T>
using State = Eigen::Matrix<T, 5, 1>;
template <typename T>
using Input = Eigen::Matrix<T, 3, 1>;
using StateVec = State<double>;
using InputVec = Input<double>;
using StateMatrix = Eigen::Matrix<double, 5, 5>;
using InputMatrix = Eigen::Matrix<double, 5, 3>;

// Kinematic floor below which the slip-angle relations are not evaluated.
inline constexpr double kMinSpeed = 0.5;

struct AxleLoads {
  double front = 0.0;
  double rear = 0.0;
};

AxleLoads static_loads(const VehicleParams& params);

struct SlipAngles {
  double front = 0.0;
  double rear = 0.0;
};

// Throws DomainError when Vx < kMinSpeed.
SlipAngles slip_angles(const ChassisState& chassis, double delta, const VehicleParams& params);

// Conditions shared by every field evaluation.
struct ModelContext {
  VehicleParams vehicle;
  tire::TireParams tire;
  double mu = 0.9;
  double kappa = 0.0;
};

namespace detail {

template <typename V, typename T>
void check_chassis(const V& vx, const T& beta) {
  if (!(value_of(vx) >= kMinSpeed))
    throw DomainError("vehicle: Vx below the kinematic floor (" + std::to_string(value_of(vx)) +
                      " m/s)");
  if (!(std::abs(value_of(beta)) < kPi / 2.0))
    throw DomainError("vehicle: |beta| must be below pi/2");
}

template <typename T>
void check_slip_angle(const T& alpha) {
  if (!(std::abs(value_of(alpha)) < kPi / 2.0))
    throw DomainError("vehicle: axle slip angle outside (-pi/2, pi/2)");
}

}  // namespace detail

template <typename T>
struct ChassisRates {
  T vx_dot{};
  T beta_dot{};
  T r_dot{};
};

template <typename T>
struct PathRates {
  T e_dot{};
  T dpsi_dot{};
  T s_dot{};
};

// Body-frame 3DOF field. The rear slip ratio is implied by the commanded
// Fxr through the combined-slip tire model; the force actually transmitted
// by the tire enters the Vx equation.
template <typename T>
ChassisRates<T> derivatives_3dof(const T& vx, const T& beta, const T& r, const T& delta,
                                 const T& fxr, const T& dmz, double mu,
                                 const VehicleParams& vp, const tire::TireParams& tp) {
  using std::cos;
  using std::sin;
  using std::tan;
  detail::check_chassis(vx, beta);
  const AxleLoads fz = static_loads(vp);
  const T alpha_f = beta + vp.lf * r / vx - delta;
  const T alpha_r = beta - vp.lr * r / vx;
  detail::check_slip_angle(alpha_f);
  detail::check_slip_angle(alpha_r);
  const T fyf = tire::combined_forces_unchecked(alpha_f, T(0.0), fz.front, mu, tp).fy;
  const tire::BasicTireForces<T> rear = tire::forces_for_commanded_fx(alpha_r, fxr, fz.rear, mu, tp);
  const T vy = vx * tan(beta);
  const T cd = cos(delta);
  ChassisRates<T> out;
  out.vx_dot = (rear.fx - fyf * sin(delta)) / vp.mass + r * vy;
  out.beta_dot = (rear.fy + fyf * cd) / (vp.mass * vx) - r;
  out.r_dot = (vp.lf * fyf * cd - vp.lr * rear.fy + dmz) / vp.yaw_inertia;
  return out;
}

// Frenet path-tracking kinematics. Throws DomainError when |kappa e| >= 1.
template <typename T>
PathRates<T> derivatives_path(const T& e, const T& dpsi, const T& vx, const T& beta, const T& r,
                              double kappa) {
  using std::cos;
  using std::sin;
  using std::tan;
  if (!(std::abs(kappa * value_of(e)) < 1.0))
    throw DomainError("vehicle: Frenet singularity |kappa e| >= 1");
  const T vy = vx * tan(beta);
  const T cp = cos(dpsi);
  const T sp = sin(dpsi);
  PathRates<T> out;
  out.e_dot = vy * cp + vx * sp;
  out.s_dot = (vx * cp - vy * sp) / (1.0 - kappa * e);
  out.dpsi_dot = r - kappa * out.s_dot;
  return out;
}

// Single-track 2DOF analysis field (pure cornering on both axles).
template <typename T>
Eigen::Matrix<T, 2, 1> derivatives_2dof(const T& beta, const T& r, double vx, const T& delta,
                                        double mu, const T& dmz, const VehicleParams& vp,
                                        const tire::TireParams& tp) {
  detail::check_chassis(vx, beta);
  const AxleLoads fz = static_loads(vp);
  const T alpha_f = beta + vp.lf * r / vx - delta;
  const T alpha_r = beta - vp.lr * r / vx;
  detail::check_slip_angle(alpha_f);
  detail::check_slip_angle(alpha_r);
  const T fyf = tire::combined_forces_unchecked(alpha_f, T(0.0), fz.front, mu, tp).fy;
  const T fyr = tire::combined_forces_unchecked(alpha_r, T(0.0), fz.rear, mu, tp).fy;
  Eigen::Matrix<T, 2, 1> out;
  out(0) = (fyf + fyr) / (vp.mass * vx) - r;
  out(1) = (vp.lf * fyf - vp.lr * fyr + dmz) / vp.yaw_inertia;
  return out;
}

// Combined 3DOF + path field on the full state.
template <typename T>
State<T> full_field(const State<T>& x, const Input<T>& u, const ModelContext& ctx) {
  const ChassisRates<T> body = derivatives_3dof(x(kVx), x(kBeta), x(kYawRate), u(kDelta),
                                                u(kFxr), u(kDmz), ctx.mu, ctx.vehicle, ctx.tire);
  const PathRates<T> path =
      derivatives_path(x(kE), x(kDpsi), x(kVx), x(kBeta), x(kYawRate), ctx.kappa);
  State<T> out;
  out << path.e_dot, path.dpsi_dot, body.vx_dot, body.beta_dot, body.r_dot;
  return out;
}

// Classical four-stage Runge-Kutta step of x' = f(x).
template <typename V, typename F>
V rk4(F&& f, const V& x, double dt) {
  const V k1 = f(x);
  const V k2 = f(V(x + (0.5 * dt) * k1));
  const V k3 = f(V(x + (0.5 * dt) * k2));
  const V k4 = f(V(x + dt * k3));
  return x + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

// One RK4 step of the full field with u held constant. Throws DomainError
// for dt <= 0 or when any stage leaves the model domain.
template <typename T>
State<T> rk4_step(const State<T>& x, const Input<T>& u, double dt, const ModelContext& ctx) {
  if (!(dt > 0.0)) throw DomainError("rk4_step: dt must be positive");
  return rk4([&](const State<T>& s) { return full_field<T>(s, u, ctx); }, x, dt);
}

// Discrete step with its Jacobians A = dx+/dx and B = dx+/du.
struct StepLinearization {
  StateVec next;
  StateMatrix a;
  InputMatrix b;
};
StepLinearization rk4_step_linearized(const StateVec& x, const InputVec& u, double dt,
                                      const ModelContext& ctx);

ChassisRates<double> derivatives_3dof(const ChassisState& chassis, const ControlInput& u,
                                      double mu, const VehicleParams& vp,
                                      const tire::TireParams& tp);
PathRates<double> derivatives_path(const PathState& path, const ChassisState& chassis);
Eigen::Vector2d derivatives_2dof(double beta, double r, double vx, double delta, double mu,
                                 double dmz, const VehicleParams& vp, const tire::TireParams& tp);

}  // namespace drift::vehicle

#endif  // DRIFT_VEHICLE_DYNAMICS_HPP_
