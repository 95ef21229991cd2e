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

#include "drift/vehicle_dynamics.hpp"

#include <cmath>

namespace drift::vehicle {

void VehicleParams::validate() const {
  if (!(mass > 0.0 && yaw_inertia > 0.0 && lf > 0.0 && lr > 0.0 && wheelbase > 0.0 &&
        track > 0.0 && wheel_radius > 0.0 && gravity > 0.0))
    throw ConfigError("vehicle: all parameters must be positive");
  if (std::abs(lf + lr - wheelbase) > 1e-9)
    throw ConfigError("vehicle: wheelbase must equal lf + lr");
}

AxleLoads static_loads(const VehicleParams& params) {
  const double l = params.lf + params.lr;
  const double weight = params.mass * params.gravity;
  AxleLoads out;
  out.front = weight * params.lr / l;
  out.rear = weight - out.front;
  return out;
}

SlipAngles slip_angles(const ChassisState& chassis, double delta, const VehicleParams& params) {
  if (!(chassis.vx >= kMinSpeed))
    throw DomainError("slip_angles: Vx below the kinematic floor");
  SlipAngles out;
  out.front = chassis.beta + params.lf * chassis.r / chassis.vx - delta;
  out.rear = chassis.beta - params.lr * chassis.r / chassis.vx;
  return out;
}

StepLinearization rk4_step_linearized(const StateVec& x, const InputVec& u, double dt,
                                      const ModelContext& ctx) {
  State<Dual> xd;
  Input<Dual> ud;
  for (int i = 0; i < 5; ++i) xd(i) = make_dual(x(i), i);
  for (int j = 0; j < 3; ++j) ud(j) = make_dual(u(j), 5 + j);
  const State<Dual> next = rk4_step<Dual>(xd, ud, dt, ctx);
  StepLinearization out;
  for (int i = 0; i < 5; ++i) {
    out.next(i) = next(i).value();
    out.a.row(i) = next(i).derivatives().head<5>().transpose();
    out.b.row(i) = next(i).derivatives().tail<3>().transpose();
  }
  return out;
}

ChassisRates<double> derivatives_3dof(const ChassisState& chassis, const ControlInput& u,
                                      double mu, const VehicleParams& vp,
                                      const tire::TireParams& tp) {
  return derivatives_3dof<double>(chassis.vx, chassis.beta, chassis.r, u.delta, u.fxr, u.dmz, mu,
                                  vp, tp);
}

PathRates<double> derivatives_path(const PathState& path, const ChassisState& chassis) {
  return derivatives_path<double>(path.e, path.dpsi, chassis.vx, chassis.beta, chassis.r,
                                  path.kappa);
}

Eigen::Vector2d derivatives_2dof(double beta, double r, double vx, double delta, double mu,
                                 double dmz, const VehicleParams& vp,
                                 const tire::TireParams& tp) {
  return derivatives_2dof<double>(beta, r, vx, delta, mu, dmz, vp, tp);
}

}  // namespace drift::vehicle
