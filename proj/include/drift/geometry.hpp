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

// Planar polygon utilities for phase-plane regions: contour extraction from
// sampled scalar fields, simplification and signed distances.

#ifndef DRIFT_GEOMETRY_HPP_
#define DRIFT_GEOMETRY_HPP_

#include <cstddef>
#include <vector>

namespace drift::geometry {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

// Closed polygon; the last vertex connects back to the first.
using Polygon = std::vector<Point>;

// Signed shoelace area (positive for counter-clockwise vertex order).
double signed_area(const Polygon& poly);
double area(const Polygon& poly);

bool contains(const Polygon& poly, const Point& p);

struct SignedDistance {
  double value = 0.0;  // positive inside, negative outside
  Point gradient;      // d value / d (x, y)
};

SignedDistance signed_distance(const Polygon& poly, const Point& p);

// Uniform sampling of a scalar field on [x0, x1] x [y0, y1].
struct ScalarGrid {
  double x0 = 0.0, x1 = 1.0, y0 = 0.0, y1 = 1.0;
  int nx = 2, ny = 2;
  std::vector<double> values;  // row-major, values[j * nx + i]

  ScalarGrid() = default;
  ScalarGrid(double x0, double x1, int nx, double y0, double y1, int ny);
  double x(int i) const { return x0 + (x1 - x0) * i / (nx - 1); }
  double y(int j) const { return y0 + (y1 - y0) * j / (ny - 1); }
  double& at(int i, int j) { return values[static_cast<std::size_t>(j) * nx + i]; }
  double at(int i, int j) const { return values[static_cast<std::size_t>(j) * nx + i]; }
  double cell_width() const;
};

// Closed zero-level contours of the region {value > 0}. Border samples are
// treated as outside so every contour closes.
std::vector<Polygon> marching_squares(const ScalarGrid& grid);

// Contour with the largest enclosed area; empty when there is none.
Polygon largest_contour(const ScalarGrid& grid);

// Douglas-Peucker simplification of a closed polygon.
Polygon simplify(const Polygon& poly, double tolerance);

// Symmetric Hausdorff distance between two polygon boundaries, measured
// from the vertices of each to the edges of the other.
double hausdorff(const Polygon& a, const Polygon& b);

}  // namespace drift::geometry

#endif  // DRIFT_GEOMETRY_HPP_
