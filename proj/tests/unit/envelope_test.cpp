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
#include <limits>

#include <gtest/gtest.h>

#include "drift/envelope.hpp"

namespace drift::envelope {
namespace {

// Saddle-model parameters fitted to the default vehicle over the default grid.
saddle::SaddleFit reference_fit() {
  saddle::SaddleFit f;
  f.p = {0.13289996344668364, 0.00039405119216727393, 0.084999068206297018,
         0.8890114219852171,  2.3950315675660168e-06, -0.00070660852272702611,
         8557.8622448983788,  -0.0070957753771658119, 0.0,
         -12199317.659230391, 0.18094516496562321,    0.0};
  f.converged = true;
  return f;
}

double brute_force_eta(double beta, double r, double vx, double mu, const InputBox& box,
                       const equilibrium::Model& m) {
  double best_rdot = std::numeric_limits<double>::infinity();
  double best_bdot = 0.0;
  for (int i = 0; i <= 100; ++i) {
    const double delta = box.delta_min + (box.delta_max - box.delta_min) * i / 100.0;
    for (int j = 0; j <= 100; ++j) {
      const double dmz = box.dmz_min + (box.dmz_max - box.dmz_min) * j / 100.0;
      const Eigen::Vector2d f =
          vehicle::derivatives_2dof(beta, r, vx, delta, mu, dmz, m.vehicle, m.tire);
      if (f(1) < best_rdot) {
        best_rdot = f(1);
        best_bdot = f(0);
      }
    }
  }
  return std::atan(best_rdot / best_bdot);
}

TEST(Envelope, InputBox) {
  const InputBox box;
  EXPECT_NO_THROW(box.validate());
  const InputBox m = box.mirrored();
  EXPECT_DOUBLE_EQ(m.delta_min, -box.delta_max);
  EXPECT_DOUBLE_EQ(m.dmz_max, -box.dmz_min);
  EXPECT_TRUE(box.contains(InputBox{-0.2, 0.2, -1000.0, 1000.0}));
  EXPECT_FALSE(box.contains(InputBox{-0.7, 0.2, -1000.0, 1000.0}));
  EXPECT_THROW((InputBox{0.5, -0.5, 0.0, 1.0}.validate()), ConfigError);
}

TEST(Envelope, RayAngleFoldsIntoHalfPlane) {
  const RayAngle a = eta_a(1.0, 1.0, 0.0, 0.0);
  EXPECT_NEAR(a.eta, kPi / 4, 1e-15);
  const RayAngle b = eta_a(-1.0, -1.0, 0.0, 0.0);
  EXPECT_NEAR(b.ray, -3 * kPi / 4, 1e-15);
  EXPECT_NEAR(b.eta, kPi / 4, 1e-15);
  EXPECT_THROW(eta_a(0.0, 0.0, 0.0, 0.0), DomainError);
}

TEST(Envelope, EtaMaxMatchesInputGridSearch) {
  const equilibrium::Model m;
  const InputBox box;
  const double vx = 60.0 / 3.6, mu = 0.8;
  for (auto [beta, r] : {std::pair{-0.1, 0.45}, {-0.15, 0.4}, {-0.05, 0.5}, {-0.2, 0.35}}) {
    const EtaMax e = eta_max(beta, r, vx, mu, box, m);
    const double oracle = brute_force_eta(beta, r, vx, mu, box, m);
    EXPECT_LT(std::abs(e.eta - oracle) * 180.0 / kPi, 0.5) << beta << " " << r;
    EXPECT_DOUBLE_EQ(e.dmz, box.dmz_min);
  }
}

TEST(Envelope, LinesAdmitStraightDriving) {
  const equilibrium::Model m;
  const InputBox box;
  const double vx = 60.0 / 3.6, mu = 0.8;
  const EnvelopeBoundary front = front_sat_boundary(vx, mu, box, m);
  const EnvelopeBoundary rear = rear_sat_boundary(vx, mu, m);
  EXPECT_GT(front.value(0.0, 0.0), 0.0);
  EXPECT_GT(rear.value(0.0, 0.0), 0.0);
  const EnvelopeBoundary mirrored = mirror(front);
  EXPECT_NEAR(mirrored.value(0.05, -0.1), front.value(-0.05, 0.1), 1e-12);
}

class DualEnvelopeTest : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    EnvelopeOptions o;
    o.grid = 60;
    env_ = new DualEnvelope(build_dual_envelope(60.0 / 3.6, 0.8, InputBox{}, reference_fit(),
                                                equilibrium::Model{}, o));
  }
  static void TearDownTestSuite() { delete env_; }
  static DualEnvelope* env_;
};
DualEnvelope* DualEnvelopeTest::env_ = nullptr;

TEST_F(DualEnvelopeTest, RegionsAreNested) {
  ASSERT_FALSE(env_->is_void);
  EXPECT_GT(geometry::area(env_->outer), geometry::area(env_->inner));
  EXPECT_LT(env_->inner_distance(0.0, 0.0).value, 0.0);
  EXPECT_GT(env_->outer_distance(0.0, 0.0).value, 0.0);
  EXPECT_LT(env_->outer_distance(1.0, 2.0).value, 0.0);
}

TEST_F(DualEnvelopeTest, SaddlesAreMirroredAndOnTheOuterEdge) {
  EXPECT_LT(env_->left_saddle.beta * env_->left_saddle.r, 0.0);
  EXPECT_NEAR(env_->left_saddle.beta, -env_->right_saddle.beta, 1e-9);
  EXPECT_NEAR(env_->left_saddle.r, -env_->right_saddle.r, 1e-9);
  EXPECT_LT(std::abs(env_->outer_distance(env_->left_saddle.beta, env_->left_saddle.r).value),
            2.0 * env_->cell_width);
}

TEST_F(DualEnvelopeTest, TableQueryAtANodeMatchesTheCell) {
  EnvelopeTable t;
  t.vx = {env_->vx};
  t.mu = {env_->mu};
  t.box = env_->box;
  t.cells = {*env_};
  const TableQuery q = query(t, env_->vx, env_->mu, -0.05, 0.2);
  EXPECT_NEAR(q.inner, env_->inner_distance(-0.05, 0.2).value, 1e-12);
  EXPECT_NEAR(q.outer, env_->outer_distance(-0.05, 0.2).value, 1e-12);
  EXPECT_FALSE(q.is_void);
  const TableQuery far = query(t, env_->vx + 5.0, env_->mu, -0.05, 0.2);
  EXPECT_TRUE(far.clamped);
}

}  // namespace
}  // namespace drift::envelope
