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

#include <algorithm>
#include <cmath>

#include <gtest/gtest.h>

#include "drift/equilibrium.hpp"

namespace drift::equilibrium {
namespace {

const Conditions kStraight{60.0 / 3.6, 0.9, 0.0, 0.0};

TEST(Equilibrium, StraightRunStructure) {
  const Model m;
  const std::vector<Equilibrium> eqs = find_equilibria(kStraight, m);
  ASSERT_GE(eqs.size(), 3u);
  int stable = 0, saddles = 0;
  for (const Equilibrium& e : eqs) {
    EXPECT_LT(e.residual, 1e-8);
    const Classification& c = e.classification;
    if (c.stability == StabilityClass::kStableNode || c.stability == StabilityClass::kStableFocus) {
      ++stable;
      EXPECT_EQ(c.tire_case, TireCase::kCase1);
      EXPECT_NEAR(e.beta, 0.0, 1e-9);
      EXPECT_NEAR(e.r, 0.0, 1e-9);
    }
    if (c.stability == StabilityClass::kSaddle) {
      ++saddles;
      EXPECT_LT(c.det, 0.0);
      EXPECT_EQ(c.tire_case, TireCase::kCase3);
    }
  }
  EXPECT_EQ(stable, 1);
  EXPECT_EQ(saddles, 2);
}

TEST(Equilibrium, SaddlesAreMirrorImages) {
  const Model m;
  std::vector<Equilibrium> saddles;
  for (const Equilibrium& e : find_equilibria(kStraight, m))
    if (e.classification.stability == StabilityClass::kSaddle) saddles.push_back(e);
  ASSERT_EQ(saddles.size(), 2u);
  EXPECT_NEAR(saddles[0].beta, -saddles[1].beta, 1e-8);
  EXPECT_NEAR(saddles[0].r, -saddles[1].r, 1e-8);
  EXPECT_LT(saddles[0].beta * saddles[0].r, 0.0);
}

TEST(Equilibrium, AnalyticJacobianMatchesNumeric) {
  const Model m;
  const Conditions c{12.0, 0.7, 0.05, 500.0};
  for (auto [beta, r] : {std::pair{0.0, 0.1}, {-0.15, 0.5}, {0.2, -0.3}}) {
    const Eigen::Matrix2d a = jacobian_2dof(beta, r, c, m);
    const Eigen::Matrix2d n = numeric_jacobian(beta, r, c, m);
    EXPECT_LT((a - n).norm(), 1e-5 * std::max(1.0, a.norm()));
  }
}

TEST(Equilibrium, ClassificationOfKnownMatrices) {
  const vehicle::VehicleParams p;
  Eigen::Matrix2d node;
  node << -3.0, 0.0, 0.0, -1.0;
  EXPECT_EQ(classify(node, -1e5, -1e5, 10.0, p).stability, StabilityClass::kStableNode);
  Eigen::Matrix2d focus;
  focus << -1.0, -4.0, 4.0, -1.0;
  EXPECT_EQ(classify(focus, -1e5, -1e5, 10.0, p).stability, StabilityClass::kStableFocus);
  Eigen::Matrix2d saddle;
  saddle << 1.0, 0.0, 0.0, -1.0;
  EXPECT_EQ(classify(saddle, -1e5, 1e4, 10.0, p).stability, StabilityClass::kSaddle);
  Eigen::Matrix2d source;
  source << 1.0, 0.0, 0.0, 2.0;
  EXPECT_EQ(classify(source, 1e4, 1e4, 10.0, p).stability, StabilityClass::kUnstable);
  Eigen::Matrix2d singular;
  singular << 1.0, 1.0, 1.0, 1.0;
  EXPECT_TRUE(classify(singular, -1e5, -1e5, 10.0, p).degenerate);
}

TEST(Equilibrium, HandlingDiagramIntersectionsAreEquilibria) {
  const Model m;
  const HandlingDiagram d = handling_diagram(kStraight, m);
  ASSERT_FALSE(d.intersections.empty());
  for (const HandlingIntersection& x : d.intersections) {
    const Eigen::Vector2d f = field(x.beta, x.r, kStraight, m);
    EXPECT_LT(f.cwiseAbs().maxCoeff(), 1e-3);
  }
}

TEST(Equilibrium, NewtonFromNearbyGuess) {
  const Model m;
  const auto e = newton_equilibrium(0.01, 0.01, kStraight, m);
  ASSERT_TRUE(e.has_value());
  EXPECT_NEAR(e->beta, 0.0, 1e-9);
  EXPECT_NEAR(e->r, 0.0, 1e-9);
}

}  // namespace
}  // namespace drift::equilibrium
