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

#include <cmath>

#include <gtest/gtest.h>

#include "drift/vehicle_dynamics.hpp"

namespace drift::vehicle {
namespace {

ModelContext context(double mu = 0.55, double kappa = 1.0 / 14.4) {
  ModelContext ctx;
  ctx.mu = mu;
  ctx.kappa = kappa;
  return ctx;
}

StateVec drift_state() {
  StateVec x;
  x << 0.1, 0.05, 7.95, -0.1, 0.55;
  return x;
}

TEST(VehicleDynamics, StaticLoadsCarryTheWeight) {
  const VehicleParams p;
  const AxleLoads fz = static_loads(p);
  EXPECT_NEAR(fz.front + fz.rear, p.mass * p.gravity, 1e-9);
  EXPECT_NEAR(fz.front * p.lf, fz.rear * p.lr, 1e-6);
}

TEST(VehicleDynamics, StraightRunIsAnEquilibrium) {
  const ModelContext ctx = context(0.9, 0.0);
  StateVec x;
  x << 0.0, 0.0, 10.0, 0.0, 0.0;
  const StateVec f = full_field<double>(x, InputVec::Zero(), ctx);
  EXPECT_NEAR(f.norm(), 0.0, 1e-12);
}

TEST(VehicleDynamics, ThreeDofMatchesTwoDofWithoutSteeringOrDrive) {
  const VehicleParams vp;
  const tire::TireParams tp;
  const double vx = 12.0, beta = -0.08, r = 0.4, dmz = 300.0;
  const ChassisRates<double> full = derivatives_3dof(ChassisState{vx, beta, r},
                                                     ControlInput{0.0, 0.0, dmz}, 0.8, vp, tp);
  const Eigen::Vector2d reduced = derivatives_2dof(beta, r, vx, 0.0, 0.8, dmz, vp, tp);
  EXPECT_NEAR(full.beta_dot, reduced(0), 1e-9);
  EXPECT_NEAR(full.r_dot, reduced(1), 1e-9);
}

TEST(VehicleDynamics, LinearizationMatchesFiniteDifferences) {
  const ModelContext ctx = context();
  const StateVec x = drift_state();
  InputVec u;
  u << 0.03, 900.0, 300.0;
  const double dt = 0.02;
  const StepLinearization lin = rk4_step_linearized(x, u, dt, ctx);
  EXPECT_NEAR((lin.next - rk4_step<double>(x, u, dt, ctx)).norm(), 0.0, 1e-12);
  for (int j = 0; j < 5; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(x(j)));
    StateVec xp = x, xm = x;
    xp(j) += h;
    xm(j) -= h;
    const StateVec col = (rk4_step<double>(xp, u, dt, ctx) - rk4_step<double>(xm, u, dt, ctx)) / (2 * h);
    EXPECT_LT((col - lin.a.col(j)).norm(), 1e-6 * std::max(1.0, col.norm())) << "state " << j;
  }
  for (int j = 0; j < 3; ++j) {
    const double h = 1e-6 * std::max(1.0, std::abs(u(j)));
    InputVec up = u, um = u;
    up(j) += h;
    um(j) -= h;
    const StateVec col = (rk4_step<double>(x, up, dt, ctx) - rk4_step<double>(x, um, dt, ctx)) / (2 * h);
    EXPECT_LT((col - lin.b.col(j)).norm(), 1e-6 * std::max(1.0, col.norm())) << "input " << j;
  }
}

TEST(VehicleDynamics, DomainErrors) {
  const ModelContext ctx = context();
  StateVec x = drift_state();
  x(kVx) = 0.2;
  EXPECT_THROW(full_field<double>(x, InputVec::Zero(), ctx), DomainError);
  x = drift_state();
  x(kBeta) = 1.6;
  EXPECT_THROW(full_field<double>(x, InputVec::Zero(), ctx), DomainError);
  x = drift_state();
  x(kE) = 20.0;
  EXPECT_THROW(full_field<double>(x, InputVec::Zero(), ctx), DomainError);
  EXPECT_THROW(rk4_step<double>(drift_state(), InputVec::Zero(), 0.0, ctx), DomainError);
  VehicleParams bad;
  bad.mass = 0.0;
  EXPECT_THROW(bad.validate(), ConfigError);
}

TEST(VehicleDynamics, StepIsDeterministic) {
  const ModelContext ctx = context();
  InputVec u;
  u << 0.02, 500.0, 100.0;
  const StateVec a = rk4_step<double>(drift_state(), u, 0.02, ctx);
  const StateVec b = rk4_step<double>(drift_state(), u, 0.02, ctx);
  for (int i = 0; i < 5; ++i) EXPECT_EQ(a(i), b(i));
}

}  // namespace
}  // namespace drift::vehicle
