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

#include "drift/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <unordered_map>

#include "drift/common.hpp"

namespace drift::geometry {

namespace {

struct Closest {
  double distance = std::numeric_limits<double>::infinity();
  Point point;
};

Closest closest_on_segment(const Point& p, const Point& a, const Point& b) {
  const double dx = b.x - a.x, dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = len2 > 0.0 ? ((p.x - a.x) * dx + (p.y - a.y) * dy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  Closest c;
  c.point = {a.x + t * dx, a.y + t * dy};
  c.distance = std::hypot(p.x - c.point.x, p.y - c.point.y);
  return c;
}

Closest closest_on_boundary(const Polygon& poly, const Point& p) {
  Closest best;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Closest c = closest_on_segment(p, poly[i], poly[(i + 1) % n]);
    if (c.distance < best.distance) best = c;
  }
  return best;
}

double perpendicular_distance(const Point& p, const Point& a, const Point& b) {
  return closest_on_segment(p, a, b).distance;
}

void douglas_peucker(const Polygon& pts, std::size_t first, std::size_t last, double tol,
                     std::vector<bool>& keep) {
  if (last <= first + 1) return;
  double dmax = -1.0;
  std::size_t index = first;
  for (std::size_t i = first + 1; i < last; ++i) {
    const double d = perpendicular_distance(pts[i], pts[first], pts[last]);
    if (d > dmax) {
      dmax = d;
      index = i;
    }
  }
  if (dmax > tol) {
    keep[index] = true;
    douglas_peucker(pts, first, index, tol, keep);
    douglas_peucker(pts, index, last, tol, keep);
  }
}

}  // namespace

double signed_area(const Polygon& poly) {
  double s = 0.0;
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Point& a = poly[i];
    const Point& b = poly[(i + 1) % n];
    s += a.x * b.y - b.x * a.y;
  }
  return 0.5 * s;
}

double area(const Polygon& poly) { return std::abs(signed_area(poly)); }

bool contains(const Polygon& poly, const Point& p) {
  bool inside = false;
  const std::size_t n = poly.size();
  for (std::size_t i = 0, j = n - 1; i < n; j = i++) {
    const Point& a = poly[i];
    const Point& b = poly[j];
    if ((a.y > p.y) != (b.y > p.y)) {
      const double xc = a.x + (p.y - a.y) * (b.x - a.x) / (b.y - a.y);
      if (p.x < xc) inside = !inside;
    }
  }
  return inside;
}

SignedDistance signed_distance(const Polygon& poly, const Point& p) {
  if (poly.size() < 3) throw DomainError("signed_distance: polygon needs three vertices");
  const Closest c = closest_on_boundary(poly, p);
  const double sign = contains(poly, p) ? 1.0 : -1.0;
  SignedDistance out;
  out.value = sign * c.distance;
  if (c.distance > 0.0)
    out.gradient = {sign * (p.x - c.point.x) / c.distance, sign * (p.y - c.point.y) / c.distance};
  return out;
}

ScalarGrid::ScalarGrid(double x0_, double x1_, int nx_, double y0_, double y1_, int ny_)
    : x0(x0_), x1(x1_), y0(y0_), y1(y1_), nx(nx_), ny(ny_) {
  if (nx < 2 || ny < 2 || !(x1 > x0) || !(y1 > y0))
    throw std::invalid_argument("ScalarGrid: degenerate grid");
  values.assign(static_cast<std::size_t>(nx) * ny, 0.0);
}

double ScalarGrid::cell_width() const {
  return std::max((x1 - x0) / (nx - 1), (y1 - y0) / (ny - 1));
}

std::vector<Polygon> marching_squares(const ScalarGrid& grid) {
  const int nx = grid.nx, ny = grid.ny;
  const auto value = [&](int i, int j) {
    if (i == 0 || j == 0 || i == nx - 1 || j == ny - 1) return -1.0;
    return grid.at(i, j);
  };
  const auto inside = [&](int i, int j) { return value(i, j) > 0.0; };

  // Edge ids: horizontal edge (i, j)-(i+1, j) and vertical edge (i, j)-(i, j+1).
  const long n_horizontal = static_cast<long>(nx - 1) * ny;
  const auto h_edge = [&](int i, int j) { return static_cast<long>(j) * (nx - 1) + i; };
  const auto v_edge = [&](int i, int j) { return n_horizontal + static_cast<long>(j) * nx + i; };
  const auto crossing = [&](long id) -> Point {
    int i0, j0, i1, j1;
    if (id < n_horizontal) {
      j0 = j1 = static_cast<int>(id / (nx - 1));
      i0 = static_cast<int>(id % (nx - 1));
      i1 = i0 + 1;
    } else {
      const long k = id - n_horizontal;
      j0 = static_cast<int>(k / nx);
      i0 = i1 = static_cast<int>(k % nx);
      j1 = j0 + 1;
    }
    const double v0 = value(i0, j0), v1 = value(i1, j1);
    const double t = v0 / (v0 - v1);
    return {grid.x(i0) + t * (grid.x(i1) - grid.x(i0)), grid.y(j0) + t * (grid.y(j1) - grid.y(j0))};
  };

  std::unordered_map<long, std::array<long, 2>> links;
  const auto connect = [&](long a, long b) {
    for (auto [from, to] : {std::pair{a, b}, std::pair{b, a}}) {
      auto it = links.find(from);
      if (it == links.end())
        links.emplace(from, std::array<long, 2>{to, -1});
      else
        it->second[1] = to;
    }
  };

  for (int j = 0; j + 1 < ny; ++j) {
    for (int i = 0; i + 1 < nx; ++i) {
      const bool c00 = inside(i, j), c10 = inside(i + 1, j);
      const bool c11 = inside(i + 1, j + 1), c01 = inside(i, j + 1);
      const long bottom = h_edge(i, j), top = h_edge(i, j + 1);
      const long left = v_edge(i, j), right = v_edge(i + 1, j);
      std::vector<long> cut;
      if (c00 != c10) cut.push_back(bottom);
      if (c10 != c11) cut.push_back(right);
      if (c11 != c01) cut.push_back(top);
      if (c01 != c00) cut.push_back(left);
      if (cut.size() == 2) {
        connect(cut[0], cut[1]);
      } else if (cut.size() == 4) {
        const double center =
            0.25 * (value(i, j) + value(i + 1, j) + value(i + 1, j + 1) + value(i, j + 1));
        // Isolate the corners whose state differs from the center.
        const bool center_inside = center > 0.0;
        if (c00 != center_inside) {
          connect(bottom, left);
          connect(right, top);
        } else {
          connect(bottom, right);
          connect(top, left);
        }
      }
    }
  }

  std::vector<Polygon> contours;
  std::unordered_map<long, bool> visited;
  std::vector<long> keys;
  keys.reserve(links.size());
  for (const auto& kv : links) keys.push_back(kv.first);
  std::sort(keys.begin(), keys.end());
  for (long start : keys) {
    if (visited[start]) continue;
    Polygon poly;
    long prev = -1, cur = start;
    while (cur >= 0 && !visited[cur]) {
      visited[cur] = true;
      poly.push_back(crossing(cur));
      const auto& nb = links[cur];
      const long next = nb[0] != prev ? nb[0] : nb[1];
      prev = cur;
      cur = next;
    }
    if (poly.size() >= 3) contours.push_back(std::move(poly));
  }
  return contours;
}

Polygon largest_contour(const ScalarGrid& grid) {
  Polygon best;
  double best_area = 0.0;
  for (auto& c : marching_squares(grid)) {
    const double a = area(c);
    if (a > best_area) {
      best_area = a;
      best = std::move(c);
    }
  }
  if (signed_area(best) < 0.0) std::reverse(best.begin(), best.end());
  return best;
}

Polygon simplify(const Polygon& poly, double tolerance) {
  const std::size_t n = poly.size();
  if (n < 4 || tolerance <= 0.0) return poly;
  // Split the ring at the vertex farthest from vertex 0.
  std::size_t far = 0;
  double dmax = -1.0;
  for (std::size_t i = 1; i < n; ++i) {
    const double d = std::hypot(poly[i].x - poly[0].x, poly[i].y - poly[0].y);
    if (d > dmax) {
      dmax = d;
      far = i;
    }
  }
  Polygon ring(poly);
  ring.push_back(poly[0]);
  std::vector<bool> keep(ring.size(), false);
  keep[0] = keep[far] = keep[n] = true;
  douglas_peucker(ring, 0, far, tolerance, keep);
  douglas_peucker(ring, far, n, tolerance, keep);
  Polygon out;
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) out.push_back(ring[i]);
  return out.size() >= 3 ? out : poly;
}

double hausdorff(const Polygon& a, const Polygon& b) {
  double h = 0.0;
  for (const Point& p : a) h = std::max(h, closest_on_boundary(b, p).distance);
  for (const Point& p : b) h = std::max(h, closest_on_boundary(a, p).distance);
  return h;
}

}  // namespace drift::geometry
