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

// Acceptance suite: one PASS/FAIL line per criterion. `--only N` runs a
// single criterion.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <functional>
#include <limits>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "drift/common.hpp"
#include "drift/envelope.hpp"
#include "drift/equilibrium.hpp"
#include "drift/io.hpp"
#include "drift/nmpc.hpp"
#include "drift/qp.hpp"
#include "drift/saddle_fit.hpp"
#include "drift/sim.hpp"
#include "drift/sqp.hpp"
#include "drift/vehicle_dynamics.hpp"

namespace fs = std::filesystem;
using namespace drift;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, ...) __attribute__((format(printf, 1, 2)));
std::string fmt(const char* f, ...) {
  char buf[512];
  va_list ap;
  va_start(ap, f);
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

const equilibrium::Model& model() {
  static const equilibrium::Model m;
  return m;
}

struct RealFit {
  saddle::SaddleDataset data;
  saddle::SaddleFit fit;
  double seconds = 0.0;
};

const RealFit& real_fit() {
  static const RealFit r = [] {
    const auto t0 = std::chrono::steady_clock::now();
    RealFit out;
    out.data = saddle::locate_saddles_grid(saddle::GridSpec::default_grid(), model());
    out.fit = saddle::fit_saddle_model(out.data, model().vehicle);
    out.seconds = seconds_since(t0);
    return out;
  }();
  return r;
}

// Envelope table of the drift controller at the nominal scenario.
std::shared_ptr<const envelope::EnvelopeTable> controller_table() {
  static const auto t = std::make_shared<const envelope::EnvelopeTable>(envelope::build_table(
      {6.0, 7.0, 8.0, 9.0, 10.0, 11.0}, {0.5, 0.55, 0.6}, envelope::InputBox{}, real_fit().fit,
      model()));
  return t;
}

nmpc::NmpcConfig controller_config() {
  nmpc::NmpcConfig c;
  c.table = controller_table();
  c.fit = std::make_shared<const saddle::SaddleFit>(real_fit().fit);
  return c;
}

// Equilibrium taxonomy and agreement with the handling diagram.
Outcome criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const equilibrium::Conditions c{60.0 / 3.6, 0.9, 0.0, 0.0};
  const std::vector<equilibrium::Equilibrium> eqs = equilibrium::find_equilibria(c, model());
  const equilibrium::HandlingDiagram hd = equilibrium::handling_diagram(c, model());
  const double elapsed = seconds_since(t0);
  int stable_case1 = 0, saddle_case3 = 0;
  for (const auto& e : eqs) {
    const auto& k = e.classification;
    const bool stable = k.stability == equilibrium::StabilityClass::kStableNode ||
                        k.stability == equilibrium::StabilityClass::kStableFocus;
    if (stable && k.tire_case == equilibrium::TireCase::kCase1) ++stable_case1;
    if (k.stability == equilibrium::StabilityClass::kSaddle &&
        k.tire_case == equilibrium::TireCase::kCase3 && k.det < 0.0)
      ++saddle_case3;
  }
  const auto nearest = [](double beta, double r, const auto& points) {
    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : points) best = std::min(best, std::max(std::abs(p.beta - beta), std::abs(p.r - r)));
    return best;
  };
  double worst = 0.0;
  for (const auto& x : hd.intersections) worst = std::max(worst, nearest(x.beta, x.r, eqs));
  for (const auto& e : eqs) worst = std::max(worst, nearest(e.beta, e.r, hd.intersections));
  const bool pass = stable_case1 >= 1 && saddle_case3 >= 1 && !hd.intersections.empty() &&
                    worst <= 1e-3 && elapsed < 10.0;
  return {pass, fmt("%zu equilibria, stable Case 1: %d, Case 3 saddles: %d, %zu intersections, "
                    "max mismatch %.2e, %.2f s",
                    eqs.size(), stable_case1, saddle_case3, hd.intersections.size(), worst,
                    elapsed)};
}

// Synthetic recovery and real-data residuals of the saddle model.
Outcome criterion2() {
  const saddle::Parameters truth{0.133, 0.0004, 0.085, 0.889, 2.4e-6, -7.1e-4,
                                 8560.0, -0.0071, 0.0, 6200.0, -0.012, 0.0};
  const vehicle::VehicleParams& vp = model().vehicle;
  saddle::SaddleDataset synth;
  const saddle::GridSpec g = saddle::GridSpec::default_grid();
  for (double mu : g.mu) {
    synth.saturation.push_back({mu, truth[0] * mu + truth[1]});
    for (double vx : g.vx)
      for (double delta : g.delta)
        for (double dmz : g.dmz) {
          ++synth.cells;
          const saddle::SaddlePrediction s =
              saddle::evaluate_parameters(truth, vp.lf, vp.gravity, mu, vx, delta, dmz);
          if (!s.s1_exists) {
            ++synth.cells_without_saddle;
            continue;
          }
          synth.rows.push_back({mu, vx, delta, dmz, 1, s.beta_s1, s.r_s1});
          synth.rows.push_back({mu, vx, delta, dmz, 2, s.beta_s2, s.r_s2});
        }
  }
  const saddle::Parameters got =
      saddle::canonical_parameters(saddle::fit_saddle_model(synth, vp).p);
  double worst = 0.0;
  for (int i = 0; i < 12; ++i) {
    const double err = truth[i] != 0.0 ? std::abs(got[i] - truth[i]) / std::abs(truth[i])
                                       : std::abs(got[i]);
    worst = std::max(worst, err);
  }

  const RealFit& rf = real_fit();
  double bmin = 1e9, bmax = -1e9, rmin = 1e9, rmax = -1e9;
  for (const auto& s : rf.data.rows) {
    bmin = std::min(bmin, s.beta);
    bmax = std::max(bmax, s.beta);
    rmin = std::min(rmin, s.r);
    rmax = std::max(rmax, s.r);
  }
  const double rel_beta = rf.fit.rms_beta / (bmax - bmin);
  const double rel_r = rf.fit.rms_r / (rmax - rmin);
  const bool pass = worst <= 1e-3 && rel_beta <= 0.1 && rel_r <= 0.1 && rf.seconds < 300.0;
  return {pass, fmt("synthetic max rel error %.2e; real fit over %zu rows: rms beta %.4f rad "
                    "(%.1f%% of range), rms r %.4f rad/s (%.1f%% of range), %.1f s",
                    worst, rf.data.rows.size(), rf.fit.rms_beta, 100.0 * rel_beta, rf.fit.rms_r,
                    100.0 * rel_r, rf.seconds)};
}

// Angle difference between two lines through the origin.
double line_angle_difference(double a, double b) {
  double d = std::fmod(std::abs(a - b), kPi);
  return std::min(d, kPi - d);
}

// eta_max against a 101 x 101 input-grid minimization of r'.
Outcome criterion3() {
  const auto t0 = std::chrono::steady_clock::now();
  const double vx = 60.0 / 3.6, mu = 0.8;
  const envelope::InputBox box;
  const auto saddle = envelope::attached_saddle(vx, mu, box, model());
  if (!saddle) return {false, "no saddle at 60 km/h, mu 0.8"};
  std::mt19937_64 rng(20260417);
  std::uniform_real_distribution<double> db(-0.1, 0.1), dr(-0.2, 0.2);
  int tested = 0, skipped = 0;
  double worst = 0.0;
  while (tested < 100) {
    const double beta = saddle->beta + db(rng), r = saddle->r + dr(rng);
    envelope::EtaMax e;
    try {
      e = envelope::eta_max(beta, r, vx, mu, box, model());
    } catch (const DomainError&) {
      ++skipped;
      continue;
    }
    double best_rdot = std::numeric_limits<double>::infinity(), best_bdot = 0.0;
    for (int i = 0; i <= 100; ++i) {
      const double delta = box.delta_min + (box.delta_max - box.delta_min) * i / 100.0;
      for (int j = 0; j <= 100; ++j) {
        const double dmz = box.dmz_min + (box.dmz_max - box.dmz_min) * j / 100.0;
        Eigen::Vector2d f;
        try {
          f = vehicle::derivatives_2dof(beta, r, vx, delta, mu, dmz, model().vehicle, model().tire);
        } catch (const DomainError&) {
          continue;
        }
        if (f(1) < best_rdot) {
          best_rdot = f(1);
          best_bdot = f(0);
        }
      }
    }
    const double oracle = std::atan2(best_rdot, best_bdot);
    worst = std::max(worst, line_angle_difference(e.eta, oracle));
    ++tested;
  }
  const double elapsed = seconds_since(t0);
  const double worst_deg = worst * 180.0 / kPi;
  return {worst_deg <= 0.5 && elapsed < 30.0,
          fmt("%d states (%d outside the steering domain redrawn), max |eta_max - brute force| "
              "%.4f deg, %.1f s",
              tested, skipped, worst_deg, elapsed)};
}

// Forward verification of the recoverable set.
Outcome criterion4() {
  const auto t0 = std::chrono::steady_clock::now();
  const envelope::DualEnvelope env = envelope::build_dual_envelope(
      60.0 / 3.6, 0.8, envelope::InputBox{}, real_fit().fit, model());
  const envelope::OracleResult r = envelope::verify_recoverable(env, model());
  return {r.fraction() >= 0.95,
          fmt("%d of %d recoverable states reach the saddle ball under a constant input "
              "(21 x 21 grid, 81 x 81 retry) (%.1f%%), %.1f s",
              r.verified, r.tested, 100.0 * r.fraction(), seconds_since(t0))};
}

// Outer-envelope area trends in speed and friction.
Outcome criterion5() {
  const envelope::InputBox box;
  const auto area = [&](double vx, double mu) {
    return geometry::area(
        envelope::build_dual_envelope(vx, mu, box, real_fit().fit, model()).outer);
  };
  std::vector<double> by_speed, by_mu;
  for (double v : {40.0, 60.0, 80.0}) by_speed.push_back(area(v / 3.6, 0.8));
  for (double mu : {0.5, 0.7, 0.9}) by_mu.push_back(area(60.0 / 3.6, mu));
  const bool speed_ok = by_speed[1] <= by_speed[0] && by_speed[2] <= by_speed[1];
  const bool mu_ok = by_mu[1] >= by_mu[0] && by_mu[2] >= by_mu[1];
  return {speed_ok && mu_ok,
          fmt("outer area vs Vx 40/60/80 km/h: %.4f %.4f %.4f; vs mu 0.5/0.7/0.9: %.4f %.4f %.4f",
              by_speed[0], by_speed[1], by_speed[2], by_mu[0], by_mu[1], by_mu[2])};
}

std::optional<Eigen::VectorXd> enumerate_qp(const qp::QpProblem& p) {
  const int n = p.n(), pe = static_cast<int>(p.a_eq.rows()), m = static_cast<int>(p.a_in.rows());
  std::optional<Eigen::VectorXd> best;
  double best_f = 0.0;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> act;
    for (int i = 0; i < m; ++i)
      if (mask >> i & 1) act.push_back(i);
    const int k = pe + static_cast<int>(act.size());
    if (k > n) continue;
    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(n + k, n + k);
    Eigen::VectorXd rhs(n + k);
    kkt.topLeftCorner(n, n) = p.h;
    rhs.head(n) = -p.g;
    for (int i = 0; i < k; ++i) {
      const bool eq = i < pe;
      const Eigen::RowVectorXd row = eq ? p.a_eq.row(i) : p.a_in.row(act[i - pe]);
      kkt.block(n + i, 0, 1, n) = row;
      kkt.block(0, n + i, n, 1) = row.transpose();
      rhs(n + i) = eq ? p.b_eq(i) : p.b_in(act[i - pe]);
    }
    Eigen::FullPivLU<Eigen::MatrixXd> lu(kkt);
    if (lu.rank() < n + k) continue;
    const Eigen::VectorXd s = lu.solve(rhs);
    const Eigen::VectorXd x = s.head(n);
    bool ok = true;
    for (int i = pe; i < k; ++i) ok = ok && s(n + i) >= -1e-9;
    if (m > 0) ok = ok && (p.a_in * x - p.b_in).maxCoeff() <= 1e-9;
    if (!ok) continue;
    const double f = 0.5 * x.dot(p.h * x) + p.g.dot(x);
    if (!best || f < best_f) {
      best = x;
      best_f = f;
    }
  }
  return best;
}

// Stationarity, complementarity and sign conditions recomputed at the
// returned point.
double kkt_residual(const sqp::NlpProblem& p, const sqp::NlpSolution& s) {
  sqp::Evaluation ev;
  p.evaluate(s.x, ev);
  const double scale = std::max(1.0, ev.gradient.lpNorm<Eigen::Infinity>());
  Eigen::VectorXd g = ev.gradient + s.bound_multipliers;
  if (p.n_constraints() > 0) g += ev.jacobian.transpose() * s.multipliers;
  double r = g.lpNorm<Eigen::Infinity>() / scale;
  for (int i = 0; i < p.n_constraints(); ++i) {
    if (p.kinds[i] != sqp::ConstraintKind::kInequality) continue;
    r = std::max(r, std::max(0.0, -s.multipliers(i)) / scale);
    r = std::max(r, std::abs(s.multipliers(i) * ev.constraints(i)) / scale);
  }
  for (int i = 0; i < p.n_vars; ++i) {
    const double lam = s.bound_multipliers(i);
    if (lam == 0.0) continue;
    const double gap = lam > 0.0 ? p.upper(i) - s.x(i) : s.x(i) - p.lower(i);
    r = std::max(r, std::abs(lam * gap) / scale);
  }
  return r;
}

sqp::NlpProblem hs071() {
  sqp::NlpProblem p;
  p.n_vars = 4;
  p.kinds = {sqp::ConstraintKind::kInequality, sqp::ConstraintKind::kEquality};
  p.lower = Eigen::VectorXd::Constant(4, 1.0);
  p.upper = Eigen::VectorXd::Constant(4, 5.0);
  p.evaluate = [](const Eigen::VectorXd& x, sqp::Evaluation& e) {
    e.objective = x(0) * x(3) * (x(0) + x(1) + x(2)) + x(2);
    e.gradient.resize(4);
    e.gradient << x(3) * (2 * x(0) + x(1) + x(2)), x(0) * x(3), x(0) * x(3) + 1,
        x(0) * (x(0) + x(1) + x(2));
    e.constraints.resize(2);
    e.constraints << 25.0 - x.prod(), x.squaredNorm() - 40.0;
    e.jacobian.resize(2, 4);
    e.jacobian.row(0) << -x(1) * x(2) * x(3), -x(0) * x(2) * x(3), -x(0) * x(1) * x(3),
        -x(0) * x(1) * x(2);
    e.jacobian.row(1) = 2.0 * x.transpose();
    return true;
  };
  return p;
}

// QP oracle, KKT residuals of converged solves and derivative checks.
Outcome criterion6() {
  std::mt19937_64 rng(7);
  std::normal_distribution<double> normal;
  int compared = 0;
  double qp_worst = 0.0;
  for (int t = 0; t < 3000; ++t) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const int pe = static_cast<int>(rng() % std::min(n, 3));
    const int m = std::min(static_cast<int>(rng() % 7), 6 - pe);
    qp::QpProblem p;
    Eigen::MatrixXd root(n, n);
    for (Eigen::Index i = 0; i < root.size(); ++i) root.data()[i] = normal(rng);
    p.h = root * root.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
    p.g = Eigen::VectorXd(n);
    for (int i = 0; i < n; ++i) p.g(i) = normal(rng);
    p.a_eq.resize(pe, n);
    p.a_in.resize(m, n);
    for (Eigen::Index i = 0; i < p.a_eq.size(); ++i) p.a_eq.data()[i] = normal(rng);
    for (Eigen::Index i = 0; i < p.a_in.size(); ++i) p.a_in.data()[i] = normal(rng);
    p.b_eq = Eigen::VectorXd(pe);
    p.b_in = Eigen::VectorXd(m);
    for (int i = 0; i < pe; ++i) p.b_eq(i) = normal(rng);
    for (int i = 0; i < m; ++i) p.b_in(i) = normal(rng);
    const auto oracle = enumerate_qp(p);
    if (!oracle) continue;
    const qp::QpResult r = qp::qp_solve(p);
    ++compared;
    qp_worst = std::max(qp_worst, r.status == qp::QpStatus::kOptimal
                                      ? (r.x - *oracle).lpNorm<Eigen::Infinity>() /
                                            std::max(1.0, oracle->lpNorm<Eigen::Infinity>())
                                      : std::numeric_limits<double>::infinity());
  }

  int solves = 0, converged = 0;
  double kkt_worst = 0.0, deriv_worst = 0.0;
  const auto record = [&](const sqp::NlpProblem& p, const Eigen::VectorXd& x0,
                          const sqp::SqpOptions& o) {
    const sqp::NlpSolution s = sqp::solve_sqp(p, x0, o);
    ++solves;
    if (s.status != sqp::SqpStatus::kConverged) return;
    ++converged;
    kkt_worst = std::max(kkt_worst, kkt_residual(p, s));
  };
  const sqp::NlpProblem hs = hs071();
  record(hs, Eigen::Vector4d(1, 5, 5, 1), {});
  deriv_worst = std::max(
      deriv_worst, sqp::check_derivatives(hs, Eigen::Vector4d(1.5, 2.5, 3.5, 1.2)).max_relative_error);

  const nmpc::NmpcConfig cfg = controller_config();
  const nmpc::DriftReference ref = nmpc::compute_reference(14.4, 8.0, 0.55, model(), cfg);
  sqp::SqpOptions o;
  o.max_iterations = cfg.max_sqp_iterations;
  const double offsets[][3] = {{0.0, 0.0, 0.0}, {0.3, 0.05, -0.05}, {-0.2, -0.04, 0.06},
                               {0.5, 0.08, 0.03}, {0.0, -0.06, -0.08}};
  for (const auto& d : offsets) {
    vehicle::StateVec x = ref.state();
    x(vehicle::kE) += d[0];
    x(vehicle::kBeta) += d[1];
    x(vehicle::kYawRate) += d[2];
    const nmpc::Ocp ocp(x, ref, cfg, model());
    Eigen::VectorXd z = ocp.constant_input(ref.u0);
    const nmpc::Rollout ro = ocp.rollout(z);
    for (int k = 1; k <= ocp.layout().np; ++k)
      z(ocp.layout().slack_index(k)) = std::max(0.0, -ro.d_inner[k - 1]) + 0.01;
    deriv_worst = std::max(deriv_worst,
                           sqp::check_derivatives(ocp.problem(), z).max_relative_error);
    record(ocp.problem(), z, o);
  }
  const bool pass = compared >= 2000 && qp_worst <= 1e-8 && converged > 0 &&
                    kkt_worst <= 1e-6 && deriv_worst <= 1e-4;
  return {pass, fmt("QP vs enumeration on %d problems: max |dx| / max(1, |x|) %.2e; KKT on %d/%d converged "
                    "solves: max %.2e; derivative checks: max rel error %.2e",
                    compared, qp_worst, converged, solves, kkt_worst, deriv_worst)};
}

// Step-halving study of the RK4 step on a drift trajectory. The tire force
// is only once differentiable at zero slip, so the trajectory must keep the
// sign of the front slip angle.
Outcome criterion7() {
  const nmpc::DriftReference ref = nmpc::compute_reference(14.4, 8.0, 0.55, model());
  vehicle::ModelContext ctx;
  ctx.vehicle = model().vehicle;
  ctx.tire = model().tire;
  ctx.mu = 0.55;
  ctx.kappa = ref.kappa;
  vehicle::StateVec x0 = ref.state();
  x0(vehicle::kBeta) -= 0.03;
  x0(vehicle::kYawRate) += 0.02;
  const vehicle::InputVec u = ref.u0;
  const double horizon = 1.0;
  const auto front_slip = [&](const vehicle::StateVec& x) {
    return x(vehicle::kBeta) + ctx.vehicle.lf * x(vehicle::kYawRate) / x(vehicle::kVx) - u(0);
  };
  bool drifting = true;
  const auto integrate = [&](int steps) {
    vehicle::StateVec x = x0;
    const double h = horizon / steps;
    for (int k = 0; k < steps; ++k) {
      x = vehicle::rk4_step<double>(x, u, h, ctx);
      drifting = drifting && x(vehicle::kBeta) * x(vehicle::kYawRate) < 0.0 &&
                 front_slip(x) * front_slip(x0) > 0.0;
    }
    return x;
  };
  const vehicle::StateVec exact = integrate(6400);
  std::vector<double> err;
  for (int steps : {25, 50, 100, 200}) err.push_back((integrate(steps) - exact).norm());
  std::vector<double> orders;
  bool pass = drifting;
  for (std::size_t i = 0; i + 1 < err.size(); ++i) {
    orders.push_back(std::log2(err[i] / err[i + 1]));
    pass = pass && orders.back() >= 3.8 && orders.back() <= 4.2;
  }
  return {pass, fmt("errors at h = 0.04/0.02/0.01/0.005 s: %.2e %.2e %.2e %.2e; observed orders "
                    "%.3f %.3f %.3f; trajectory stays in drift: %s",
                    err[0], err[1], err[2], err[3], orders[0], orders[1], orders[2],
                    drifting ? "yes" : "no")};
}

// Torque allocation and its inverse on random commands.
Outcome criterion8() {
  const vehicle::VehicleParams& vp = model().vehicle;
  std::mt19937_64 rng(99);
  std::uniform_real_distribution<double> d(-0.5, 0.5), f(-5000.0, 5000.0), m(-3500.0, 3500.0);
  double worst = 0.0;
  for (int k = 0; k < 1000; ++k) {
    const vehicle::InputVec u(d(rng), f(rng), m(rng));
    const vehicle::InputVec back =
        nmpc::reconstruct_input(nmpc::torque_allocation(u, vp), u(0), vp);
    worst = std::max(worst, std::abs(back(1) - u(1)) / std::max(1.0, std::abs(u(1))));
    worst = std::max(worst, std::abs(back(2) - u(2)) / std::max(1.0, std::abs(u(2))));
  }
  const double ulp = std::numeric_limits<double>::epsilon();
  return {worst <= 8.0 * ulp,
          fmt("1000 commands, max relative reconstruction error %.2e (%.1f eps)", worst,
              worst / ulp)};
}

sim::SimLog closed_loop(double plant_mu, bool envelope) {
  sim::Scenario sc;
  sc.plant_mu = plant_mu;
  sc.design_mu = 0.55;
  sc.use_envelope = envelope;
  return sim::run_closed_loop(sc, controller_config(), model());
}

// Nominal closed-loop drift.
Outcome criterion9() {
  const auto t0 = std::chrono::steady_clock::now();
  const sim::SimLog log = closed_loop(0.55, true);
  const double elapsed = seconds_since(t0);
  const sim::Metrics m = sim::compute_metrics(log);
  const vehicle::StateVec& xf = log.records.back().x;
  const bool drifting = xf(vehicle::kBeta) * xf(vehicle::kYawRate) < 0.0;
  const bool pass = log.complete && !m.partial && drifting && std::abs(m.speed_error) <= 0.2938 &&
                    std::abs(m.beta_error) <= 0.0302 && std::abs(m.yaw_rate_error) <= 0.0156 &&
                    m.envelope_violations == 0 && elapsed < 300.0;
  return {pass, fmt("steady-state dV %.4f m/s, dbeta %.4f rad, dr %.4f rad/s, %d outer "
                    "violations, settling %.2f s, degraded %d, held %d, %.1f s",
                    m.speed_error, m.beta_error, m.yaw_rate_error, m.envelope_violations,
                    m.settling_time, m.degraded_steps, m.held_steps, elapsed)};
}

// Friction mismatch with and without the envelope constraints.
Outcome criterion10() {
  const sim::SimLog with = closed_loop(0.60, true);
  const sim::SimLog without = closed_loop(0.60, false);
  const sim::Metrics a = sim::compute_metrics(with);
  const sim::Metrics b = sim::compute_metrics(without);
  // Converged to a steady drift: over the final 20% every channel stays
  // within the settling bands of its own window mean.
  const auto stabilized = [](const sim::SimLog& log, const sim::Metrics& m) {
    if (!log.complete || m.partial || log.records.empty()) return false;
    const double start = log.records.back().t - 0.2 * log.scenario.duration;
    const std::pair<int, double> bands[] = {
        {vehicle::kVx, 0.2938}, {vehicle::kBeta, 0.0302}, {vehicle::kYawRate, 0.0156}};
    for (const auto& [channel, band] : bands) {
      double lo = std::numeric_limits<double>::infinity(), hi = -lo;
      for (const sim::SimRecord& r : log.records) {
        if (r.t < start - 1e-9) continue;
        lo = std::min(lo, r.x(channel));
        hi = std::max(hi, r.x(channel));
      }
      if (hi - lo > band) return false;
    }
    const vehicle::StateVec& xf = log.records.back().x;
    return xf(vehicle::kBeta) * xf(vehicle::kYawRate) < 0.0;
  };
  const bool sa = stabilized(with, a), sb = stabilized(without, b);
  const bool pass = sa && sb && a.peak_lateral_error < b.peak_lateral_error;
  const vehicle::StateVec& xa = with.records.back().x;
  const vehicle::StateVec& xb = without.records.back().x;
  return {pass, fmt("peak |e| with envelope %.4f m, without %.4f m; steady drift reached: %s/%s "
                    "(final beta %.4f/%.4f rad, r %.4f/%.4f rad/s)",
                    a.peak_lateral_error, b.peak_lateral_error, sa ? "yes" : "no",
                    sb ? "yes" : "no", xa(vehicle::kBeta), xb(vehicle::kBeta),
                    xa(vehicle::kYawRate), xb(vehicle::kYawRate))};
}

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(DRIFT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  return std::system(cmd.c_str());
}

// Byte-identical outputs from repeated CLI runs.
Outcome criterion11() {
  const fs::path work = fs::path(DRIFT_WORK_DIR) / "determinism";
  fs::remove_all(work);
  fs::create_directories(work);
  const fs::path config = work / "config.json";
  io::write_file(config.string(), R"({
  "fit": {"grid": {"mu": [0.4, 0.6, 0.8, 1.0], "vx": [8, 14, 20], "delta": [-0.3, 0, 0.3],
                   "dmz": [-2000, 0, 2000]}, "seeds": 3},
  "envelope": {"vx": [7, 8, 9], "mu": [0.5, 0.6], "grid": 60},
  "scenario": {"duration": 0.4}
})");
  std::vector<std::string> failures;
  for (const char* run : {"a", "b"}) {
    const fs::path out = work / run;
    const std::string base = "--config " + config.string() + " --out " + out.string() + " ";
    const std::string fit = (out / "saddle_fit.json").string();
    const std::string table = (out / "envelope_table.json").string();
    const std::vector<std::string> commands{
        base + "equilibria",
        base + "handling-diagram",
        base + "fit-saddle",
        base + "envelope --fit " + fit + " --vx 8 --mu 0.55",
        base + "envelope --fit " + fit + " --table " + table,
        base + "--trace simulate --table " + table,
        base + "metrics",
    };
    int i = 0;
    for (const std::string& c : commands) {
      if (run_cli(c, work / (std::string(run) + "_" + std::to_string(i++) + ".txt")) != 0)
        failures.push_back(c);
    }
  }
  if (!failures.empty()) return {false, "command failed: " + failures.front()};
  int files = 0;
  std::vector<std::string> differing;
  for (const auto& entry : fs::directory_iterator(work / "a")) {
    const fs::path other = work / "b" / entry.path().filename();
    ++files;
    if (!fs::exists(other) || io::read_file(entry.path().string()) != io::read_file(other.string()))
      differing.push_back(entry.path().filename().string());
  }
  std::ostringstream names;
  for (const auto& d : differing) names << ' ' << d;
  return {differing.empty() && files >= 10,
          fmt("%d output files compared across two runs of 7 commands, %zu differ%s", files,
              differing.size(), names.str().c_str())};
}

struct Criterion {
  int id;
  const char* title;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  std::optional<int> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--only N]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<Criterion> criteria{
      {1, "equilibrium taxonomy", criterion1},
      {2, "saddle-fit round trip", criterion2},
      {3, "eta_max vs brute force", criterion3},
      {4, "recoverability oracle", criterion4},
      {5, "envelope trends", criterion5},
      {6, "solver correctness", criterion6},
      {7, "integration order", criterion7},
      {8, "torque identities", criterion8},
      {9, "closed-loop nominal drift", criterion9},
      {10, "robustness ordering", criterion10},
      {11, "CLI determinism", criterion11},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (only && *only != c.id) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    if (!o.pass) ++failed;
    std::printf("criterion %2d %s: %s: %s\n", c.id, o.pass ? "PASS" : "FAIL", c.title,
                o.detail.c_str());
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
