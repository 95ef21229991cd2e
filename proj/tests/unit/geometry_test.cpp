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

#include "drift/common.hpp"
#include "drift/geometry.hpp"

namespace drift::geometry {
namespace {

const Polygon kSquare{{0, 0}, {2, 0}, {2, 2}, {0, 2}};

TEST(Geometry, AreaAndOrientation) {
  EXPECT_DOUBLE_EQ(signed_area(kSquare), 4.0);
  const Polygon cw(kSquare.rbegin(), kSquare.rend());
  EXPECT_DOUBLE_EQ(signed_area(cw), -4.0);
  EXPECT_DOUBLE_EQ(area(cw), 4.0);
}

TEST(Geometry, Containment) {
  EXPECT_TRUE(contains(kSquare, {1.0, 1.0}));
  EXPECT_FALSE(contains(kSquare, {3.0, 1.0}));
  EXPECT_FALSE(contains(kSquare, {-0.1, 1.0}));
}

TEST(Geometry, SignedDistanceAndGradient) {
  const SignedDistance in = signed_distance(kSquare, {0.5, 1.0});
  EXPECT_NEAR(in.value, 0.5, 1e-12);
  EXPECT_NEAR(in.gradient.x, 1.0, 1e-12);
  EXPECT_NEAR(in.gradient.y, 0.0, 1e-12);
  const SignedDistance out = signed_distance(kSquare, {1.0, 3.0});
  EXPECT_NEAR(out.value, -1.0, 1e-12);
  EXPECT_NEAR(out.gradient.y, -1.0, 1e-12);
}

TEST(Geometry, MarchingSquaresRecoversACircle) {
  ScalarGrid g(-1.0, 1.0, 81, -1.0, 1.0, 81);
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) g.at(i, j) = 0.5 - std::hypot(g.x(i), g.y(j));
  const Polygon c = largest_contour(g);
  ASSERT_GT(c.size(), 20u);
  EXPECT_NEAR(area(c), kPi * 0.25, 5e-3);
  for (const Point& p : c) EXPECT_NEAR(std::hypot(p.x, p.y), 0.5, 2e-3);
}

TEST(Geometry, SimplifyKeepsShapeWithinTolerance) {
  Polygon dense;
  for (int k = 0; k < 400; ++k) {
    const double t = 2.0 * kPi * k / 400.0;
    dense.push_back({std::cos(t), std::sin(t)});
  }
  const Polygon s = simplify(dense, 0.01);
  EXPECT_LT(s.size(), dense.size());
  EXPECT_LT(hausdorff(dense, s), 0.011);
}

TEST(Geometry, HausdorffOfIdenticalShapesIsZero) {
  EXPECT_DOUBLE_EQ(hausdorff(kSquare, kSquare), 0.0);
}

}  // namespace
}  // namespace drift::geometry
