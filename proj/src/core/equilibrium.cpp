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

#include "drift/equilibrium.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <Eigen/Eigenvalues>
#include <Eigen/LU>

namespace drift::equilibrium {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
constexpr double kSlipLimit = 1.55;

struct FieldAndJacobian {
  Eigen::Vector2d value;
  Eigen::Matrix2d jacobian;
};

FieldAndJacobian field_with_jacobian(double beta, double r, const Conditions& c,
                                     const Model& m) {
  using D2 = Eigen::AutoDiffScalar<Eigen::Vector2d>;
  const Eigen::Matrix<D2, 2, 1> f = vehicle::derivatives_2dof<D2>(
      D2(beta, Eigen::Vector2d::Unit(0)), D2(r, Eigen::Vector2d::Unit(1)), c.vx,
      D2(c.delta, Eigen::Vector2d::Zero()), c.mu, D2(c.dmz, Eigen::Vector2d::Zero()), m.vehicle,
      m.tire);
  FieldAndJacobian out;
  for (int i = 0; i < 2; ++i) {
    out.value(i) = f(i).value();
    out.jacobian(i, 0) = f(i).derivatives()(0);
    out.jacobian(i, 1) = f(i).derivatives()(1);
  }
  return out;
}

bool in_field_domain(double beta, double r, const Conditions& c, const Model& m) {
  const double half_pi = kPi / 2.0;
  if (!(std::abs(beta) < half_pi)) return false;
  const vehicle::SlipAngles a = vehicle::slip_angles({c.vx, beta, r}, c.delta, m.vehicle);
  return std::abs(a.front) < half_pi && std::abs(a.rear) < half_pi;
}

bool is_declining(double stiffness) { return stiffness >= 0.0; }

TireCase case_from_stiffness(double cf, double cr) {
  const bool front_declining = is_declining(cf);
  const bool rear_declining = is_declining(cr);
  if (!front_declining && !rear_declining) return TireCase::kCase1;
  if (front_declining && !rear_declining) return TireCase::kCase2;
  if (!front_declining && rear_declining) return TireCase::kCase3;
  return TireCase::kCase4;
}

// Magnitude of the lateral force as an odd function of slip angle: positive
// for positive alpha.
double lateral_magnitude(double alpha, double fz, double mu, const tire::TireParams& p) {
  return -tire::combined_forces_unchecked(alpha, 0.0, fz, mu, p).fy;
}

// Solves lateral_magnitude(alpha) = target by bisection on [lo, hi], where
// the function is monotone with the given direction.
double bisect_slip(double target, double lo, double hi, bool increasing, double fz, double mu,
                   const tire::TireParams& p) {
  for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
    const double mid = 0.5 * (lo + hi);
    const double g = lateral_magnitude(mid, fz, mu, p) - target;
    if ((g < 0.0) == increasing)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

struct AxleInverse {
  double fz = 0.0;
  double mu = 0.0;
  double alpha_sat = 0.0;
  double peak = 0.0;
  double tail = 0.0;
  const tire::TireParams* tire = nullptr;

  // Slip angle producing lateral force `fy` on the requested branch.
  std::optional<double> solve(double fy, bool declining) const {
    const double t = -fy;  // magnitude convention
    const double a = std::abs(t);
    if (a > peak) return std::nullopt;
    const double sign = t < 0.0 ? -1.0 : 1.0;
    if (!declining) return sign * bisect_slip(a, 0.0, alpha_sat, true, fz, mu, *tire);
    if (a < tail) return std::nullopt;
    return sign * bisect_slip(a, alpha_sat, kSlipLimit, false, fz, mu, *tire);
  }
};

AxleInverse make_inverse(double fz, double mu, const tire::TireParams& p) {
  AxleInverse inv;
  inv.fz = fz;
  inv.mu = mu;
  inv.tire = &p;
  inv.alpha_sat = tire::saturation_angle(mu, fz, p);
  inv.peak = lateral_magnitude(inv.alpha_sat, fz, mu, p);
  inv.tail = lateral_magnitude(kSlipLimit, fz, mu, p);
  return inv;
}

}  // namespace

const char* to_string(StabilityClass c) {
  switch (c) {
    case StabilityClass::kStableNode:
      return "stable_node";
    case StabilityClass::kStableFocus:
      return "stable_focus";
    case StabilityClass::kSaddle:
      return "saddle";
    case StabilityClass::kUnstable:
      return "unstable";
  }
  return "unknown";
}

const char* to_string(TireCase c) {
  switch (c) {
    case TireCase::kCase1:
      return "case1";
    case TireCase::kCase2:
      return "case2";
    case TireCase::kCase3:
      return "case3";
    case TireCase::kCase4:
      return "case4";
  }
  return "unknown";
}

Eigen::Vector2d field(double beta, double r, const Conditions& c, const Model& m) {
  return vehicle::derivatives_2dof(beta, r, c.vx, c.delta, c.mu, c.dmz, m.vehicle, m.tire);
}

Eigen::Matrix2d jacobian_from_stiffness(double cf, double cr, double vx,
                                        const vehicle::VehicleParams& p) {
  const double m = p.mass, iz = p.yaw_inertia, lf = p.lf, lr = p.lr;
  Eigen::Matrix2d j;
  j(0, 0) = (cf + cr) / (m * vx);
  j(0, 1) = (cf * lf - cr * lr) / (m * vx * vx) - 1.0;
  j(1, 0) = (cf * lf - cr * lr) / iz;
  j(1, 1) = (cf * lf * lf + cr * lr * lr) / (iz * vx);
  return j;
}

AxleStiffness axle_stiffness(double beta, double r, const Conditions& c, const Model& m) {
  const vehicle::SlipAngles a = vehicle::slip_angles({c.vx, beta, r}, c.delta, m.vehicle);
  const vehicle::AxleLoads fz = vehicle::static_loads(m.vehicle);
  AxleStiffness out;
  out.front = tire::tangent_stiffness(a.front, {a.front, 0.0, fz.front, c.mu}, m.tire);
  out.rear = tire::tangent_stiffness(a.rear, {a.rear, 0.0, fz.rear, c.mu}, m.tire);
  return out;
}

Eigen::Matrix2d jacobian_2dof(double beta, double r, const Conditions& c, const Model& m) {
  const AxleStiffness k = axle_stiffness(beta, r, c, m);
  return jacobian_from_stiffness(k.front, k.rear, c.vx, m.vehicle);
}

Eigen::Matrix2d numeric_jacobian(double beta, double r, const Conditions& c, const Model& m,
                                 double step) {
  Eigen::Matrix2d j;
  j.col(0) = (field(beta + step, r, c, m) - field(beta - step, r, c, m)) / (2.0 * step);
  j.col(1) = (field(beta, r + step, c, m) - field(beta, r - step, c, m)) / (2.0 * step);
  return j;
}

double critical_speed(double cf, double cr, const vehicle::VehicleParams& p) {
  const double l = p.lf + p.lr;
  const double den = p.mass * (cr * p.lr - cf * p.lf);
  const double v2 = cf * cr * l * l / den;
  if (!(den != 0.0) || !(v2 >= 0.0)) return kNaN;
  return std::sqrt(v2);
}

Classification classify(const Eigen::Matrix2d& jacobian, double cf, double cr, double vx,
                        const vehicle::VehicleParams& p) {
  if (!jacobian.allFinite() || !std::isfinite(cf) || !std::isfinite(cr))
    throw DomainError("classify: non-finite input");
  Classification out;
  out.trace = jacobian.trace();
  out.det = jacobian.determinant();
  const Eigen::EigenSolver<Eigen::Matrix2d> es(jacobian, false);
  out.eigenvalues = {es.eigenvalues()(0), es.eigenvalues()(1)};
  out.degenerate = std::abs(out.det) <= kDegenerateDet;
  if (out.det < 0.0) {
    out.stability = StabilityClass::kSaddle;
  } else if (out.trace < 0.0) {
    const double disc = out.trace * out.trace - 4.0 * out.det;
    out.stability = disc >= 0.0 ? StabilityClass::kStableNode : StabilityClass::kStableFocus;
  } else {
    out.stability = StabilityClass::kUnstable;
  }

  out.tire_case = case_from_stiffness(cf, cr);
  switch (out.tire_case) {
    case TireCase::kCase1:
      if (cf * p.lf - cr * p.lr >= 0.0) {
        out.case_predicts_stable = true;
      } else {
        const double vc = critical_speed(cf, cr, p);
        out.case_predicts_stable = std::isfinite(vc) && vx < vc;
      }
      break;
    case TireCase::kCase2: {
      const double vc = critical_speed(cf, cr, p);
      out.case_predicts_stable = std::isfinite(vc) && vx > vc;
      break;
    }
    case TireCase::kCase3:
    case TireCase::kCase4:
      out.case_predicts_stable = false;
      break;
  }
  return out;
}

std::optional<Equilibrium> newton_equilibrium(double beta0, double r0, const Conditions& c,
                                              const Model& m, const SearchOptions& options) {
  Eigen::Vector2d x(beta0, r0);
  FieldAndJacobian fj;
  if (!in_field_domain(beta0, r0, c, m)) return std::nullopt;
  try {
    fj = field_with_jacobian(x(0), x(1), c, m);
  } catch (const DomainError&) {
    return std::nullopt;
  }
  bool converged = false;
  double checkpoint = fj.value.norm();
  for (int it = 0; it < options.max_iterations; ++it) {
    const double norm = fj.value.norm();
    // Give up on starts that stagnate at a nonzero local minimum of |F|.
    if (it % 5 == 4) {
      if (norm > 1e-6 && norm > 0.5 * checkpoint) break;
      checkpoint = norm;
    }
    if (norm == 0.0) {
      converged = true;
      break;
    }
    const Eigen::PartialPivLU<Eigen::Matrix2d> lu(fj.jacobian);
    if (!(std::abs(fj.jacobian.determinant()) > 1e-300)) break;
    const Eigen::Vector2d step = -lu.solve(fj.value);
    if (!step.allFinite()) break;
    double t = 1.0;
    bool accepted = false;
    for (int h = 0; h <= options.max_halvings; ++h, t *= 0.5) {
      const Eigen::Vector2d trial = x + t * step;
      if (!trial.allFinite() || !in_field_domain(trial(0), trial(1), c, m)) continue;
      try {
        if (field(trial(0), trial(1), c, m).norm() < norm) {
          x = trial;
          fj = field_with_jacobian(x(0), x(1), c, m);
          accepted = true;
          break;
        }
      } catch (const DomainError&) {
      }
    }
    if (!accepted) {
      converged = fj.value.lpNorm<Eigen::Infinity>() <= options.residual_tolerance;
      break;
    }
    if ((t * step).lpNorm<Eigen::Infinity>() < options.step_tolerance) {
      converged = true;
      break;
    }
  }
  if (!converged || fj.value.lpNorm<Eigen::Infinity>() > options.residual_tolerance)
    return std::nullopt;

  Equilibrium eq;
  eq.beta = x(0);
  eq.r = x(1);
  eq.conditions = c;
  eq.residual = fj.value.lpNorm<Eigen::Infinity>();
  const vehicle::SlipAngles a = vehicle::slip_angles({c.vx, eq.beta, eq.r}, c.delta, m.vehicle);
  eq.alpha_f = a.front;
  eq.alpha_r = a.rear;
  try {
    const AxleStiffness k = axle_stiffness(eq.beta, eq.r, c, m);
    eq.front_stiffness = k.front;
    eq.rear_stiffness = k.rear;
  } catch (const DomainError&) {
    return std::nullopt;
  }
  eq.jacobian = jacobian_from_stiffness(eq.front_stiffness, eq.rear_stiffness, c.vx, m.vehicle);
  eq.classification =
      classify(eq.jacobian, eq.front_stiffness, eq.rear_stiffness, c.vx, m.vehicle);
  return eq;
}

std::vector<Equilibrium> find_equilibria(const Conditions& c, const Model& m,
                                         const SearchOptions& options) {
  if (!(c.vx >= vehicle::kMinSpeed)) throw DomainError("find_equilibria: Vx below floor");
  if (!(c.mu > 0.0 && c.mu <= 1.2)) throw DomainError("find_equilibria: mu outside (0, 1.2]");
  std::vector<Equilibrium> roots;
  const int nb = std::max(options.grid_beta, 1);
  const int nr = std::max(options.grid_r, 1);
  for (int i = 0; i < nb; ++i) {
    const double b0 =
        nb == 1 ? 0.0 : -options.beta_limit + 2.0 * options.beta_limit * i / (nb - 1);
    for (int j = 0; j < nr; ++j) {
      const double r0 = nr == 1 ? 0.0 : -options.r_limit + 2.0 * options.r_limit * j / (nr - 1);
      const std::optional<Equilibrium> eq = newton_equilibrium(b0, r0, c, m, options);
      if (!eq) continue;
      const bool duplicate = std::any_of(roots.begin(), roots.end(), [&](const Equilibrium& e) {
        return std::abs(e.beta - eq->beta) <= options.dedupe_tolerance &&
               std::abs(e.r - eq->r) <= options.dedupe_tolerance;
      });
      if (!duplicate) roots.push_back(*eq);
    }
  }
  std::sort(roots.begin(), roots.end(),
            [](const Equilibrium& a, const Equilibrium& b) { return a.r < b.r; });
  return roots;
}

HandlingDiagram handling_diagram(const Conditions& c, const Model& m, int levels) {
  if (!(c.vx >= vehicle::kMinSpeed)) throw DomainError("handling_diagram: Vx below floor");
  if (levels < 2) throw ConfigError("handling_diagram: need at least two levels");
  const vehicle::VehicleParams& vp = m.vehicle;
  const vehicle::AxleLoads fz = vehicle::static_loads(vp);
  const double l = vp.lf + vp.lr;
  const AxleInverse front = make_inverse(fz.front, c.mu, m.tire);
  const AxleInverse rear = make_inverse(fz.rear, c.mu, m.tire);

  HandlingDiagram out;
  out.conditions = c;
  out.line_gain = c.vx * c.vx / (vp.gravity * l);

  const std::array<TireCase, 4> cases = {TireCase::kCase1, TireCase::kCase2, TireCase::kCase3,
                                         TireCase::kCase4};
  const auto point_at = [&](double nu, TireCase tc) -> std::optional<HandlingPoint> {
    const bool front_declining = tc == TireCase::kCase2 || tc == TireCase::kCase4;
    const bool rear_declining = tc == TireCase::kCase3 || tc == TireCase::kCase4;
    const std::optional<double> af = front.solve(nu * fz.front - c.dmz / l, front_declining);
    if (!af) return std::nullopt;
    const std::optional<double> ar = rear.solve(nu * fz.rear + c.dmz / l, rear_declining);
    if (!ar) return std::nullopt;
    HandlingPoint p;
    p.ay_over_g = nu;
    p.alpha_f = *af;
    p.alpha_r = *ar;
    p.slip_difference = *af - *ar;
    return p;
  };
  const auto gap = [&](const HandlingPoint& p) {
    return p.ay_over_g - out.line_gain * (c.delta + p.slip_difference);
  };
  const auto record = [&](TireCase tc, const HandlingPoint& p) {
    HandlingIntersection hit;
    hit.tire_case = tc;
    hit.point = p;
    hit.r = p.ay_over_g * vp.gravity / c.vx;
    hit.beta = p.alpha_r + vp.lr * hit.r / c.vx;
    out.intersections.push_back(hit);
  };

  for (TireCase tc : cases) {
    HandlingBranch branch;
    branch.tire_case = tc;
    std::optional<HandlingPoint> prev;
    for (int i = 0; i < levels; ++i) {
      const double nu = c.mu * static_cast<double>(2 * i - (levels - 1)) / (levels - 1);
      const std::optional<HandlingPoint> p = point_at(nu, tc);
      if (p) {
        branch.points.push_back(*p);
        const double g1 = gap(*p);
        if (g1 == 0.0) {
          record(tc, *p);
        } else if (prev) {
          const double g0 = gap(*prev);
          if (g0 != 0.0 && (g0 < 0.0) != (g1 < 0.0)) {
            double lo = prev->ay_over_g, hi = nu;
            double glo = g0;
            HandlingPoint best = *p;
            for (int it = 0; it < 200 && hi - lo > 1e-15; ++it) {
              const double mid = 0.5 * (lo + hi);
              const std::optional<HandlingPoint> pm = point_at(mid, tc);
              if (!pm) break;
              best = *pm;
              const double gm = gap(*pm);
              if (gm == 0.0) break;
              if ((gm < 0.0) == (glo < 0.0)) {
                lo = mid;
                glo = gm;
              } else {
                hi = mid;
              }
            }
            record(tc, best);
          }
        }
      }
      prev = p;
    }
    out.branches.push_back(std::move(branch));
  }
  return out;
}

}  // namespace drift::equilibrium
