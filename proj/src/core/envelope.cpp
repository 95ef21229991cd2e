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

#include "drift/envelope.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "drift/common.hpp"

namespace drift::envelope {

namespace {

constexpr double kHalfPi = kPi / 2.0;
constexpr int kSteeringGrid = 201;
constexpr double kVerticalTolerance = 1e-9;

double front_saturation(double mu, const equilibrium::Model& m) {
  return tire::saturation_angle(mu, vehicle::static_loads(m.vehicle).front, m.tire);
}

double rear_saturation(double mu, const equilibrium::Model& m) {
  return tire::saturation_angle(mu, vehicle::static_loads(m.vehicle).rear, m.tire);
}

geometry::Polygon line_polyline(double slope, double intercept, double r_span) {
  return {{slope * -r_span + intercept, -r_span}, {slope * r_span + intercept, r_span}};
}

void check_conditions(double vx, double mu) {
  if (!(vx >= vehicle::kMinSpeed)) throw DomainError("envelope: Vx below the kinematic floor");
  if (!(mu > 0.0 && mu <= 1.2)) throw DomainError("envelope: mu outside (0, 1.2]");
}

std::vector<double> box_levels(double lo, double hi) {
  std::vector<double> v{lo, hi};
  if (lo < 0.0 && hi > 0.0) v.push_back(0.0);
  return v;
}

// Non-throwing 2DOF field for the forward oracle.
bool field_2dof(double beta, double r, double vx, double delta, double mu, double dmz,
                const equilibrium::Model& m, double fzf, double fzr, Eigen::Vector2d& out) {
  if (!(std::abs(beta) < kHalfPi)) return false;
  const vehicle::VehicleParams& p = m.vehicle;
  const double af = beta + p.lf * r / vx - delta;
  const double ar = beta - p.lr * r / vx;
  if (!(std::abs(af) < kHalfPi && std::abs(ar) < kHalfPi)) return false;
  const double fyf = tire::combined_forces_unchecked(af, 0.0, fzf, mu, m.tire).fy;
  const double fyr = tire::combined_forces_unchecked(ar, 0.0, fzr, mu, m.tire).fy;
  out(0) = (fyf + fyr) / (p.mass * vx) - r;
  out(1) = (p.lf * fyf - p.lr * fyr + dmz) / p.yaw_inertia;
  return true;
}

// Left-branch recoverability field on the grid nodes inside the saddle
// window and beyond the yaw line: eta_max - eta_a, -1 elsewhere.
geometry::ScalarGrid recoverability_field(const geometry::ScalarGrid& shape, double vx, double mu,
                                          const InputBox& box, const Saddle& s,
                                          const EnvelopeBoundary& front,
                                          const EnvelopeBoundary& yaw,
                                          const equilibrium::Model& m,
                                          const EnvelopeOptions& o) {
  geometry::ScalarGrid g = shape;
  std::fill(g.values.begin(), g.values.end(), -1.0);
  for (int j = 0; j < g.ny; ++j) {
    const double r = g.y(j);
    if (std::abs(r - s.r) > o.window_r) continue;
    for (int i = 0; i < g.nx; ++i) {
      const double beta = g.x(i);
      if (std::abs(beta - s.beta) > o.window_beta) continue;
      if (yaw.value(beta, r) >= 0.0 || front.value(beta, r) <= 0.0) continue;
      if (beta == s.beta && r == s.r) continue;
      try {
        const RecoverabilityIndex k = recoverability(beta, r, s.beta, s.r, vx, mu, box, m);
        if (k.approaching) g.at(i, j) = std::max(k.margin, -1.0);
      } catch (const DomainError&) {
      }
    }
  }
  return g;
}

geometry::ScalarGrid mirrored(const geometry::ScalarGrid& g) {
  geometry::ScalarGrid out = g;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) out.at(i, j) = g.at(g.nx - 1 - i, g.ny - 1 - j);
  return out;
}

geometry::Polygon extract(const geometry::ScalarGrid& g, const EnvelopeOptions& o) {
  const geometry::Polygon poly = geometry::largest_contour(g);
  return geometry::simplify(poly, o.simplify_cells * g.cell_width());
}

}  // namespace

void InputBox::validate() const {
  if (!(delta_min < delta_max)) throw ConfigError("InputBox: delta_min must be below delta_max");
  if (!(dmz_min < dmz_max)) throw ConfigError("InputBox: dmz_min must be below dmz_max");
  if (!(std::abs(delta_min) < kHalfPi && std::abs(delta_max) < kHalfPi))
    throw ConfigError("InputBox: steering bounds must lie inside (-pi/2, pi/2)");
}

bool InputBox::contains(const InputBox& o) const {
  return delta_min <= o.delta_min && delta_max >= o.delta_max && dmz_min <= o.dmz_min &&
         dmz_max >= o.dmz_max;
}

const char* to_string(BoundaryKind k) {
  switch (k) {
    case BoundaryKind::kFrontSat:
      return "front_sat";
    case BoundaryKind::kRearSat:
      return "rear_sat";
    case BoundaryKind::kYawRateMax:
      return "yaw_rate_max";
    case BoundaryKind::kRecoverable:
      return "recoverable";
  }
  return "unknown";
}

double EnvelopeBoundary::value(double beta, double r) const {
  if (kind == BoundaryKind::kYawRateMax) return admissible_sign * (r - intercept);
  return admissible_sign * (beta - (slope * r + intercept));
}

EnvelopeBoundary front_sat_boundary(double vx, double mu, const InputBox& box,
                                    const equilibrium::Model& model) {
  check_conditions(vx, mu);
  box.validate();
  EnvelopeBoundary b;
  b.kind = BoundaryKind::kFrontSat;
  b.slope = -model.vehicle.lf / vx;
  b.intercept = box.delta_min - front_saturation(mu, model);
  b.admissible_sign = 1;
  b.polyline = line_polyline(b.slope, b.intercept, mu * model.vehicle.gravity / vx + 1.0);
  return b;
}

EnvelopeBoundary rear_sat_boundary(double vx, double mu, const equilibrium::Model& model) {
  check_conditions(vx, mu);
  EnvelopeBoundary b;
  b.kind = BoundaryKind::kRearSat;
  b.slope = model.vehicle.lr / vx;
  b.intercept = -rear_saturation(mu, model);
  b.admissible_sign = 1;
  b.polyline = line_polyline(b.slope, b.intercept, mu * model.vehicle.gravity / vx + 1.0);
  return b;
}

EnvelopeBoundary yaw_rate_boundary(double vx, double mu, const InputBox& box,
                                   const saddle::SaddleFit& fit) {
  box.validate();
  EnvelopeBoundary b;
  b.kind = BoundaryKind::kYawRateMax;
  b.admissible_sign = -1;
  double best = -std::numeric_limits<double>::infinity();
  for (double delta : {box.delta_min, box.delta_max}) {
    for (double dmz : box_levels(box.dmz_min, box.dmz_max)) {
      const saddle::SaddlePrediction p = saddle::eval_saddle_model(fit, mu, vx, delta, dmz);
      if (p.f3 > 0.0) best = std::max(best, p.r_s1);
    }
  }
  b.is_void = !std::isfinite(best);
  b.intercept = b.is_void ? 0.0 : best;
  b.polyline = {{-kHalfPi / 2.0, b.intercept}, {kHalfPi / 2.0, b.intercept}};
  return b;
}

EnvelopeBoundary mirror(const EnvelopeBoundary& b) {
  EnvelopeBoundary m = b;
  m.intercept = -b.intercept;
  m.admissible_sign = -b.admissible_sign;
  for (auto& p : m.polyline) p = {-p.x, -p.y};
  return m;
}

RayAngle eta_a(double beta, double r, double beta_a, double r_a) {
  const double db = beta - beta_a, dr = r - r_a;
  if (db == 0.0 && dr == 0.0) throw DomainError("eta_a: state coincides with the saddle");
  RayAngle out;
  out.ray = std::atan2(dr, db);
  out.eta = out.ray;
  if (out.eta > kHalfPi) out.eta -= kPi;
  if (out.eta <= -kHalfPi) out.eta += kPi;
  return out;
}

EtaMax eta_max(double beta, double r, double vx, double mu, const InputBox& box,
               const equilibrium::Model& model) {
  check_conditions(vx, mu);
  box.validate();
  const vehicle::VehicleParams& p = model.vehicle;
  const vehicle::AxleLoads fz = vehicle::static_loads(p);
  const vehicle::SlipAngles a = vehicle::slip_angles({vx, beta, r}, 0.0, p);
  if (!(std::abs(beta) < kHalfPi && std::abs(a.rear) < kHalfPi))
    throw DomainError("eta_max: state outside the model domain");
  const double fyr = tire::combined_forces_unchecked(a.rear, 0.0, fz.rear, mu, model.tire).fy;
  const auto fyf_at = [&](double delta) {
    const double af = a.front - delta;
    if (!(std::abs(af) < kHalfPi)) return std::numeric_limits<double>::infinity();
    return tire::combined_forces_unchecked(af, 0.0, fz.front, mu, model.tire).fy;
  };

  const double step = (box.delta_max - box.delta_min) / (kSteeringGrid - 1);
  int best = -1;
  double best_f = std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSteeringGrid; ++k) {
    const double f = fyf_at(box.delta_min + k * step);
    if (f < best_f) {
      best_f = f;
      best = k;
    }
  }
  if (best < 0) throw DomainError("eta_max: no admissible steering in the box");
  const double lo = box.delta_min + std::max(best - 1, 0) * step;
  const double hi = box.delta_min + std::min(best + 1, kSteeringGrid - 1) * step;
  double delta = golden_section_max([&](double d) { return -fyf_at(d); }, lo, hi, 1e-10);
  if (!(fyf_at(delta) <= best_f)) delta = box.delta_min + best * step;

  EtaMax out;
  out.delta = delta;
  out.dmz = box.dmz_min;
  out.fyf = fyf_at(delta);
  out.fyr = fyr;
  out.r_dot_min = (p.lf * out.fyf - p.lr * fyr + out.dmz) / p.yaw_inertia;
  out.beta_dot = (out.fyf + fyr) / (p.mass * vx) - r;
  if (std::abs(out.beta_dot) < kVerticalTolerance)
    out.eta = kHalfPi;
  else
    out.eta = std::atan(out.r_dot_min / out.beta_dot);
  return out;
}

RecoverabilityIndex recoverability(double beta, double r, double beta_a, double r_a, double vx,
                                   double mu, const InputBox& box,
                                   const equilibrium::Model& model) {
  RecoverabilityIndex out;
  out.eta_a = eta_a(beta, r, beta_a, r_a).eta;
  const EtaMax em = eta_max(beta, r, vx, mu, box, model);
  out.eta_max = em.eta;

  // Derivative cone: for each steering level beta' is fixed and r' spans
  // the yaw-moment interval. The ray to the saddle must lie inside it.
  const vehicle::VehicleParams& p = model.vehicle;
  const vehicle::AxleLoads fz = vehicle::static_loads(p);
  const double vb = beta_a - beta, vr = r_a - r;
  const double af0 = beta + p.lf * r / vx;
  const double dmz_span = (box.dmz_max - box.dmz_min) / p.yaw_inertia;
  out.margin = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < kSteeringGrid && vb != 0.0; ++k) {
    const double delta =
        box.delta_min + (box.delta_max - box.delta_min) * k / (kSteeringGrid - 1);
    const double af = af0 - delta;
    if (!(std::abs(af) < kHalfPi)) continue;
    const double fyf = tire::combined_forces_unchecked(af, 0.0, fz.front, mu, model.tire).fy;
    const double beta_dot = (fyf + em.fyr) / (p.mass * vx) - r;
    if (!(beta_dot * vb > 0.0)) continue;
    out.approaching = true;
    const double r_dot_lo = (p.lf * fyf - p.lr * em.fyr + box.dmz_min) / p.yaw_inertia;
    const double required = beta_dot * vr / vb;
    const double m = std::min(required - r_dot_lo, r_dot_lo + dmz_span - required) / dmz_span;
    out.margin = std::max(out.margin, m);
  }
  out.recoverable = out.approaching && out.margin >= 0.0;
  return out;
}

std::optional<Saddle> attached_saddle(double vx, double mu, const InputBox& box,
                                      const equilibrium::Model& model) {
  box.validate();
  std::optional<Saddle> best;
  for (double delta : box_levels(box.delta_min, box.delta_max)) {
    for (double dmz : box_levels(box.dmz_min, box.dmz_max)) {
      const equilibrium::Conditions c{vx, mu, delta, dmz};
      for (const auto& e : equilibrium::find_equilibria(c, model)) {
        if (e.classification.stability != equilibrium::StabilityClass::kSaddle || e.r <= 0.0)
          continue;
        if (!best || e.r > best->r) best = Saddle{e.beta, e.r, delta, dmz};
      }
    }
  }
  return best;
}

geometry::SignedDistance DualEnvelope::inner_distance(double beta, double r) const {
  if (is_void) throw DomainError("inner_distance: void envelope");
  geometry::SignedDistance d = geometry::signed_distance(inner, {beta, r});
  d.value = -d.value;
  d.gradient = {-d.gradient.x, -d.gradient.y};
  return d;
}

geometry::SignedDistance DualEnvelope::outer_distance(double beta, double r) const {
  if (is_void) throw DomainError("outer_distance: void envelope");
  return geometry::signed_distance(outer, {beta, r});
}

geometry::Polygon recoverable_region(double vx, double mu, const InputBox& box,
                                     const Saddle& saddle, const saddle::SaddleFit& fit,
                                     const equilibrium::Model& model,
                                     const EnvelopeOptions& options) {
  const EnvelopeBoundary front = front_sat_boundary(vx, mu, box, model);
  const EnvelopeBoundary yaw = yaw_rate_boundary(vx, mu, box, fit);
  if (yaw.is_void) return {};
  const double hb = options.window_beta * 1.05, hr = options.window_r * 1.05;
  const geometry::ScalarGrid shape(saddle.beta - hb, saddle.beta + hb, options.grid,
                                   saddle.r - hr, saddle.r + hr, options.grid);
  return extract(recoverability_field(shape, vx, mu, box, saddle, front, yaw, model, options),
                 options);
}

DualEnvelope build_dual_envelope(double vx, double mu, const InputBox& box,
                                 const saddle::SaddleFit& fit, const equilibrium::Model& model,
                                 const EnvelopeOptions& options) {
  check_conditions(vx, mu);
  box.validate();
  if (options.grid < 8) throw ConfigError("build_dual_envelope: grid must have at least 8 nodes");
  DualEnvelope env;
  env.vx = vx;
  env.mu = mu;
  env.box = box;
  env.front = front_sat_boundary(vx, mu, box, model);
  env.rear = rear_sat_boundary(vx, mu, model);
  env.yaw = yaw_rate_boundary(vx, mu, box, fit);
  const InputBox mbox = box.mirrored();
  const EnvelopeBoundary front_right = mirror(front_sat_boundary(vx, mu, mbox, model));
  const EnvelopeBoundary rear_right = mirror(env.rear);
  EnvelopeBoundary yaw_right = mirror(yaw_rate_boundary(vx, mu, mbox, fit));
  const std::optional<Saddle> left = attached_saddle(vx, mu, box, model);
  const std::optional<Saddle> right_mirrored = attached_saddle(vx, mu, mbox, model);
  if (env.yaw.is_void || yaw_right.is_void || !left || !right_mirrored ||
      !(env.yaw.intercept > yaw_right.intercept)) {
    env.is_void = true;
    return env;
  }
  // The envelope's yaw lines pass no higher than the attached saddles.
  env.yaw.intercept = std::min(env.yaw.intercept, left->r);
  yaw_right.intercept = std::max(yaw_right.intercept, -right_mirrored->r);
  for (auto& q : env.yaw.polyline) q.y = env.yaw.intercept;
  for (auto& q : yaw_right.polyline) q.y = yaw_right.intercept;
  env.left_saddle = *left;
  env.right_saddle = {-right_mirrored->beta, -right_mirrored->r, -right_mirrored->delta,
                      -right_mirrored->dmz};

  // Symmetric window covering the front band between the yaw lines and both
  // recoverability windows.
  double bmax = std::abs(env.left_saddle.beta) + options.window_beta;
  double rmax = std::max(env.left_saddle.r, -env.right_saddle.r) + options.window_r;
  for (double r : {env.yaw.intercept, yaw_right.intercept}) {
    rmax = std::max(rmax, std::abs(r));
    bmax = std::max(bmax, std::abs(env.front.slope * r + env.front.intercept));
    bmax = std::max(bmax, std::abs(front_right.slope * r + front_right.intercept));
  }
  bmax = std::min(bmax * 1.05, kHalfPi * 0.98);
  rmax *= 1.05;
  const int n = options.grid;
  geometry::ScalarGrid shape(-bmax, bmax, n, -rmax, rmax, n);
  env.cell_width = shape.cell_width();

  const geometry::ScalarGrid rec_left = recoverability_field(
      shape, vx, mu, box, *left, env.front, env.yaw, model, options);
  // The grid is symmetric, so the right branch is the mirrored left-branch
  // field of the mirrored box.
  const geometry::ScalarGrid rec_right = mirrored(recoverability_field(
      shape, vx, mu, mbox, *right_mirrored, mirror(front_right), mirror(yaw_right), model,
      options));

  geometry::ScalarGrid inner = shape, outer = shape;
  for (int j = 0; j < n; ++j) {
    for (int i = 0; i < n; ++i) {
      const double beta = shape.x(i), r = shape.y(j);
      const double front = std::min(env.front.value(beta, r), front_right.value(beta, r));
      const double rear = std::min(env.rear.value(beta, r), rear_right.value(beta, r));
      const double yaw = std::min(env.yaw.value(beta, r), yaw_right.value(beta, r));
      inner.at(i, j) = std::min({rear, yaw, front});
      outer.at(i, j) = std::min(front, std::max({yaw, rec_left.at(i, j), rec_right.at(i, j)}));
      if (rec_left.at(i, j) > 0.0) env.recoverable_samples.push_back({beta, r});
    }
  }
  env.inner = extract(inner, options);
  env.outer = extract(outer, options);
  env.recoverable_left = extract(rec_left, options);
  env.recoverable_right = extract(rec_right, options);
  if (env.inner.size() < 3 || env.outer.size() < 3) env.is_void = true;
  return env;
}

bool reaches_saddle(double beta, double r, const Saddle& saddle, double vx, double mu,
                    const InputBox& box, const equilibrium::Model& model,
                    const OracleOptions& options) {
  const int steps = static_cast<int>(std::ceil(options.horizon / options.dt - 1e-9));
  const vehicle::AxleLoads fz = vehicle::static_loads(model.vehicle);
  const double r2 = options.radius * options.radius;
  const Eigen::Vector2d target(saddle.beta, saddle.r);
  // Closest approach of the step segment [x0, x1] to the saddle.
  const auto hits = [&](const Eigen::Vector2d& x0, const Eigen::Vector2d& x1) {
    const Eigen::Vector2d d = x1 - x0;
    const double len2 = d.squaredNorm();
    const double t = len2 > 0.0 ? std::clamp((target - x0).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (x0 + t * d - target).squaredNorm() <= r2;
  };
  const Eigen::Vector2d x_start(beta, r);
  if (hits(x_start, x_start)) return true;
  const auto search = [&](int n) {
    for (int a = 0; a < n; ++a) {
      const double delta = box.delta_min + (box.delta_max - box.delta_min) * a / (n - 1);
      for (int b = 0; b < n; ++b) {
        const double dmz = box.dmz_min + (box.dmz_max - box.dmz_min) * b / (n - 1);
        Eigen::Vector2d x = x_start;
        bool ok = true;
        const auto f = [&](const Eigen::Vector2d& s) {
          Eigen::Vector2d d = Eigen::Vector2d::Zero();
          if (ok && !field_2dof(s(0), s(1), vx, delta, mu, dmz, model, fz.front, fz.rear, d))
            ok = false;
          return d;
        };
        for (int k = 0; k < steps && ok; ++k) {
          const Eigen::Vector2d next = vehicle::rk4(f, x, options.dt);
          if (!ok || !next.allFinite()) break;
          if (hits(x, next)) return true;
          x = next;
        }
      }
    }
    return false;
  };
  const int coarse = std::max(options.inputs_per_axis, 2);
  if (search(coarse)) return true;
  return options.refine_inputs_per_axis > coarse && search(options.refine_inputs_per_axis);
}

OracleResult verify_recoverable(const DualEnvelope& env, const equilibrium::Model& model,
                                const OracleOptions& options) {
  OracleResult out;
  if (env.is_void) return out;
  const std::size_t total = env.recoverable_samples.size();
  std::size_t stride = 1;
  if (options.max_samples > 0 && total > static_cast<std::size_t>(options.max_samples))
    stride = (total + options.max_samples - 1) / options.max_samples;
  for (std::size_t k = 0; k < total; k += stride) {
    const geometry::Point& p = env.recoverable_samples[k];
    ++out.tested;
    if (reaches_saddle(p.x, p.y, env.left_saddle, env.vx, env.mu, env.box, model, options))
      ++out.verified;
  }
  return out;
}

EnvelopeTable build_table(const std::vector<double>& vx, const std::vector<double>& mu,
                          const InputBox& box, const saddle::SaddleFit& fit,
                          const equilibrium::Model& model, const EnvelopeOptions& options,
                          unsigned workers) {
  const auto increasing = [](const std::vector<double>& v) {
    if (v.empty()) return false;
    for (std::size_t i = 1; i < v.size(); ++i)
      if (!(v[i] > v[i - 1])) return false;
    return true;
  };
  if (!increasing(vx) || !increasing(mu))
    throw ConfigError("build_table: axes must be non-empty and strictly increasing");
  box.validate();
  for (double v : vx)
    for (double m : mu)
      if (!fit.domain.contains(m, v, box.delta_min, box.dmz_min) ||
          !fit.domain.contains(m, v, box.delta_max, box.dmz_max))
        throw DomainError("build_table: table axes or input box outside the fit domain");
  EnvelopeTable table;
  table.vx = vx;
  table.mu = mu;
  table.box = box;
  table.cells.resize(vx.size() * mu.size());
  parallel_for(
      table.cells.size(),
      [&](std::size_t k) {
        const std::size_t i = k / mu.size(), j = k % mu.size();
        try {
          table.cells[k] = build_dual_envelope(vx[i], mu[j], box, fit, model, options);
        } catch (const DomainError&) {
          table.cells[k].vx = vx[i];
          table.cells[k].mu = mu[j];
          table.cells[k].box = box;
          table.cells[k].is_void = true;
        }
      },
      workers);
  return table;
}

namespace {

struct AxisWeight {
  std::size_t lo = 0, hi = 0;
  double t = 0.0;       // weight of hi
  double dt_dx = 0.0;   // d t / d x
  bool clamped = false;
};

AxisWeight axis_weight(const std::vector<double>& axis, double x) {
  AxisWeight w;
  if (axis.size() == 1) {
    w.clamped = x != axis.front();
    return w;
  }
  if (x <= axis.front() || x >= axis.back()) {
    const bool low = x <= axis.front();
    w.lo = w.hi = low ? 0 : axis.size() - 1;
    w.clamped = low ? x < axis.front() : x > axis.back();
    return w;
  }
  const auto it = std::upper_bound(axis.begin(), axis.end(), x);
  w.hi = static_cast<std::size_t>(it - axis.begin());
  w.lo = w.hi - 1;
  const double span = axis[w.hi] - axis[w.lo];
  w.t = (x - axis[w.lo]) / span;
  w.dt_dx = 1.0 / span;
  return w;
}

}  // namespace

TableQuery query(const EnvelopeTable& table, double vx, double mu, double beta, double r) {
  if (table.vx.empty() || table.mu.empty() || table.cells.size() != table.vx.size() * table.mu.size())
    throw ConfigError("query: malformed table");
  const AxisWeight wv = axis_weight(table.vx, vx);
  const AxisWeight wm = axis_weight(table.mu, mu);
  TableQuery q;
  q.clamped = wv.clamped || wm.clamped;
  double total = 0.0, total_dvx = 0.0;
  for (int a = 0; a < 2; ++a) {
    const std::size_t i = a == 0 ? wv.lo : wv.hi;
    const double w_v = a == 0 ? 1.0 - wv.t : wv.t;
    const double dw_v = a == 0 ? -wv.dt_dx : wv.dt_dx;
    for (int b = 0; b < 2; ++b) {
      const std::size_t j = b == 0 ? wm.lo : wm.hi;
      const double w_m = b == 0 ? 1.0 - wm.t : wm.t;
      const double w = w_v * w_m;
      const double dw = dw_v * w_m;
      if (w == 0.0 && dw == 0.0) continue;
      const DualEnvelope& cell = table.cell(i, j);
      if (cell.is_void) continue;
      const geometry::SignedDistance di = cell.inner_distance(beta, r);
      const geometry::SignedDistance dout = cell.outer_distance(beta, r);
      total += w;
      total_dvx += dw;
      q.inner += w * di.value;
      q.outer += w * dout.value;
      q.inner_gradient.x += w * di.gradient.x;
      q.inner_gradient.y += w * di.gradient.y;
      q.outer_gradient.x += w * dout.gradient.x;
      q.outer_gradient.y += w * dout.gradient.y;
      q.inner_dvx += dw * di.value;
      q.outer_dvx += dw * dout.value;
    }
  }
  if (!(total > 0.0)) {
    q = TableQuery{};
    q.clamped = wv.clamped || wm.clamped;
    q.is_void = true;
    return q;
  }
  // Renormalize when void cells were dropped: d = S / W.
  const double si = q.inner, so = q.outer;
  q.inner = si / total;
  q.outer = so / total;
  q.inner_gradient = {q.inner_gradient.x / total, q.inner_gradient.y / total};
  q.outer_gradient = {q.outer_gradient.x / total, q.outer_gradient.y / total};
  q.inner_dvx = (q.inner_dvx - q.inner * total_dvx) / total;
  q.outer_dvx = (q.outer_dvx - q.outer * total_dvx) / total;
  return q;
}

}  // namespace drift::envelope
