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

#include "drift/nmpc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Dense>

#include "drift/common.hpp"
#include "drift/tire_model.hpp"

namespace drift::nmpc {

namespace {

using vehicle::InputVec;
using vehicle::StateVec;

constexpr double kInf = std::numeric_limits<double>::infinity();

InputVec scale_of(const NmpcConfig& c, double mu, const vehicle::VehicleParams& vp) {
  const double fzr = vehicle::static_loads(vp).rear;
  InputVec s(c.box.delta_max - c.box.delta_min, 2.0 * mu * fzr, c.box.dmz_max - c.box.dmz_min);
  for (int i = 0; i < 3; ++i)
    if (c.input_scale[i] > 0.0) s(i) = c.input_scale[i];
  return s;
}

double effort(const InputVec& u, const InputVec& scale, const NmpcConfig& c) {
  double s = 0.0;
  for (int i = 0; i < 3; ++i) s += c.r[i] * std::pow(u(i) / scale(i), 2);
  return s;
}

// Steady state of the body-frame field at (vx, beta, r): solves the beta and
// Vx equations for (delta, Fxr) by Newton, then dMz from the yaw equation.
std::optional<InputVec> steady_inputs(double vx, double beta, double r, double mu,
                                      const equilibrium::Model& m, InputVec guess) {
  const auto residual = [&](double delta, double fxr) -> std::optional<Eigen::Vector2d> {
    try {
      const vehicle::ChassisRates<double> d = vehicle::derivatives_3dof<double>(
          vx, beta, r, delta, fxr, 0.0, mu, m.vehicle, m.tire);
      return Eigen::Vector2d(d.beta_dot, d.vx_dot);
    } catch (const DomainError&) {
      return std::nullopt;
    }
  };
  double delta = guess(0), fxr = guess(1);
  for (int it = 0; it < 50; ++it) {
    const auto f = residual(delta, fxr);
    if (!f) return std::nullopt;
    if (f->lpNorm<Eigen::Infinity>() < 1e-11) break;
    Eigen::Matrix2d j;
    const double hd = 1e-7, hf = 1e-3;
    const auto fd1 = residual(delta + hd, fxr), fd0 = residual(delta - hd, fxr);
    const auto ff1 = residual(delta, fxr + hf), ff0 = residual(delta, fxr - hf);
    if (!fd1 || !fd0 || !ff1 || !ff0) return std::nullopt;
    j.col(0) = (*fd1 - *fd0) / (2.0 * hd);
    j.col(1) = (*ff1 - *ff0) / (2.0 * hf);
    const Eigen::Vector2d step = j.fullPivLu().solve(-*f);
    if (!step.allFinite()) return std::nullopt;
    double t = 1.0;
    for (int k = 0; k < 20; ++k, t *= 0.5) {
      const auto trial = residual(delta + t * step(0), fxr + t * step(1));
      if (trial && trial->norm() < f->norm()) break;
    }
    delta += t * step(0);
    fxr += t * step(1);
  }
  const auto f = residual(delta, fxr);
  if (!f || f->lpNorm<Eigen::Infinity>() > 1e-8) return std::nullopt;
  // Yaw balance.
  const vehicle::ChassisRates<double> d0 =
      vehicle::derivatives_3dof<double>(vx, beta, r, delta, fxr, 0.0, mu, m.vehicle, m.tire);
  const double dmz = -d0.r_dot * m.vehicle.yaw_inertia;
  return InputVec(delta, fxr, dmz);
}

}  // namespace

void NmpcConfig::validate() const {
  if (!(nc > 0 && np > nc)) throw ConfigError("NmpcConfig: need np > nc > 0");
  if (!(dt > 0.0)) throw ConfigError("NmpcConfig: dt must be positive");
  for (double w : q)
    if (!(w >= 0.0)) throw ConfigError("NmpcConfig: Q weights must be nonnegative");
  for (double w : r)
    if (!(w >= 0.0)) throw ConfigError("NmpcConfig: R weights must be nonnegative");
  if (!(w_inner >= 0.0)) throw ConfigError("NmpcConfig: w_inner must be nonnegative");
  if (!(design_mu > 0.0)) throw ConfigError("NmpcConfig: design mu must be positive");
  for (double v : input_scale)
    if (!(v >= 0.0)) throw ConfigError("NmpcConfig: input scales must be nonnegative");
  if (!(cost_scale > 0.0)) throw ConfigError("NmpcConfig: cost scale must be positive");
  if (max_sqp_iterations <= 0) throw ConfigError("NmpcConfig: max_sqp_iterations must be positive");
  box.validate();
  if (use_envelope && !table) throw ConfigError("NmpcConfig: envelope table missing");
}

StateVec DriftReference::state() const {
  StateVec x;
  x << e, dpsi, vx, beta, r;
  return x;
}

DriftReference compute_reference(double radius, double speed, double mu,
                                 const equilibrium::Model& model, const NmpcConfig& config,
                                 const ReferenceOptions& options) {
  if (!(radius > 0.0) || !(speed > vehicle::kMinSpeed) || !(mu > 0.0))
    throw DomainError("compute_reference: radius, speed and mu must be positive");
  const vehicle::VehicleParams& vp = model.vehicle;
  const vehicle::AxleLoads fz = vehicle::static_loads(vp);
  const double alpha_r_sat = tire::saturation_angle(mu, fz.rear, model.tire);
  const double alpha_f_sat = tire::saturation_angle(mu, fz.front, model.tire);
  const double r = speed / radius;
  const InputVec scale = scale_of(config, mu, vp);
  const double fxr_max = mu * fz.rear;

  struct Candidate {
    double beta;
    InputVec u;
    double effort;
  };
  std::optional<Candidate> best;
  InputVec guess = InputVec::Zero();
  const auto consider = [&](double beta) {
    const bool drift = options.branch == SteadyBranch::kDrift;
    if (drift && !(beta * r < 0.0)) return;
    const double vx = speed * std::cos(beta);
    const double alpha_r = beta - vp.lr * r / vx;
    if (drift != (std::abs(alpha_r) > alpha_r_sat)) return;
    // Several steering starts: the front force is flat near its peak, so
    // one start can stall or land on the post-peak root.
    std::vector<InputVec> starts{guess};
    for (int k = 0; k <= 10; ++k) {
      const double d = options.box.delta_min + 0.1 * k * (options.box.delta_max - options.box.delta_min);
      starts.emplace_back(d, 0.0, 0.0);
    }
    for (const InputVec& start : starts) {
      const auto u = steady_inputs(vx, beta, r, mu, model, start);
      if (!u) continue;
      const double alpha_f = beta + vp.lf * r / vx - (*u)(0);
      if (!(std::abs(alpha_f) < alpha_f_sat)) continue;
      if ((*u)(0) < options.box.delta_min || (*u)(0) > options.box.delta_max) continue;
      if ((*u)(2) < options.box.dmz_min || (*u)(2) > options.box.dmz_max) continue;
      if (std::abs((*u)(1)) > fxr_max) continue;
      const double e = effort(*u, scale, config);
      if (!best || e < best->effort) best = Candidate{beta, *u, e};
      guess = *u;
    }
  };

  if (options.beta_override) {
    consider(*options.beta_override);
  } else {
    for (int i = options.samples - 1; i >= 0; --i) {
      const double t = static_cast<double>(i) / (options.samples - 1);
      const double beta = options.beta_min + t * (options.beta_max - options.beta_min);
      consider(r > 0.0 ? beta : -beta);
    }
  }
  if (!best)
    throw DomainError("compute_reference: no steady state on the requested branch");

  DriftReference ref;
  ref.radius = radius;
  ref.speed = speed;
  ref.mu = mu;
  ref.kappa = 1.0 / radius;
  ref.beta = best->beta;
  ref.r = r;
  ref.vx = speed * std::cos(best->beta);
  ref.dpsi = -best->beta;
  ref.e = 0.0;
  ref.u0 = best->u;
  return ref;
}

WheelTorques torque_allocation(const InputVec& u, const vehicle::VehicleParams& p) {
  if (!(std::abs(u(0)) < kPi / 2.0 - 0.01))
    throw DomainError("torque_allocation: |delta| too close to pi/2");
  WheelTorques t;
  t.rl = 0.5 * u(1) * p.wheel_radius;
  t.rr = t.rl;
  t.fl = u(2) * p.wheel_radius / (p.track * std::cos(u(0)));
  t.fr = -t.fl;
  return t;
}

InputVec reconstruct_input(const WheelTorques& t, double delta, const vehicle::VehicleParams& p) {
  return {delta, (t.rl + t.rr) / p.wheel_radius,
          (t.fl - t.fr) / p.wheel_radius * std::cos(delta) * (p.track / 2.0)};
}

const char* to_string(CommandStatus s) {
  switch (s) {
    case CommandStatus::kConverged:
      return "converged";
    case CommandStatus::kDegraded:
      return "degraded";
    case CommandStatus::kHeld:
      return "held";
  }
  return "unknown";
}

Ocp::Ocp(const StateVec& x_now, const DriftReference& ref, const NmpcConfig& config,
         const equilibrium::Model& model)
    : x_now_(x_now), ref_(ref), config_(config), model_(model) {
  config_.validate();
  if (!x_now.allFinite()) throw DomainError("Ocp: non-finite current state");
  ctx_.vehicle = model.vehicle;
  ctx_.tire = model.tire;
  ctx_.mu = config.design_mu;
  ctx_.kappa = ref.kappa;
  layout_ = {config.np, config.nc, config.use_envelope};
  scale_ = scale_of(config, config.design_mu, model.vehicle);
  fxr_bound_ = config.design_mu * vehicle::static_loads(model.vehicle).rear;

  const int n = layout_.n_vars();
  problem_.n_vars = n;
  problem_.lower = Eigen::VectorXd::Constant(n, -kInf);
  problem_.upper = Eigen::VectorXd::Constant(n, kInf);
  for (int k = 0; k < layout_.nc; ++k) {
    problem_.lower(3 * k) = config.box.delta_min / scale_(0);
    problem_.upper(3 * k) = config.box.delta_max / scale_(0);
    problem_.lower(3 * k + 1) = -fxr_bound_ / scale_(1);
    problem_.upper(3 * k + 1) = fxr_bound_ / scale_(1);
    problem_.lower(3 * k + 2) = config.box.dmz_min / scale_(2);
    problem_.upper(3 * k + 2) = config.box.dmz_max / scale_(2);
  }
  if (layout_.envelope) {
    for (int k = 1; k <= layout_.np; ++k) problem_.lower(layout_.slack_index(k)) = 0.0;
    problem_.kinds.assign(2 * layout_.np, sqp::ConstraintKind::kInequality);
  }
  problem_.evaluate = [this](const Eigen::VectorXd& z, sqp::Evaluation& out) {
    return evaluate(z, out);
  };
  problem_.initial_hessian = [this](const Eigen::VectorXd& z) { return gauss_newton(z); };
}

Eigen::VectorXd Ocp::constant_input(const InputVec& u) const {
  Eigen::VectorXd z = Eigen::VectorXd::Zero(layout_.n_vars());
  for (int k = 0; k < layout_.nc; ++k) z.segment<3>(3 * k) = u.cwiseQuotient(scale_);
  return z;
}

InputVec Ocp::input(const Eigen::VectorXd& z, int k) const {
  return z.segment<3>(layout_.input_index(k)).cwiseProduct(scale_);
}

envelope::TableQuery Ocp::distances(const StateVec& x) const {
  using vehicle::kBeta;
  using vehicle::kVx;
  using vehicle::kYawRate;
  envelope::TableQuery q = envelope::query(*config_.table, x(kVx), config_.design_mu, x(kBeta),
                                           x(kYawRate));
  if (!q.is_void) return q;
  fallback_ = true;
  q = envelope::TableQuery{};
  q.is_void = true;
  if (!config_.fit) {
    // No analytic boundaries available: constraints inactive.
    q.inner = 1.0;
    q.outer = 1.0;
    return q;
  }
  // Outer: front-saturation and yaw-rate lines of both branches.
  try {
    const double vx = x(kVx);
    const envelope::EnvelopeBoundary lines[] = {
        envelope::front_sat_boundary(vx, config_.design_mu, config_.box, model_),
        envelope::yaw_rate_boundary(vx, config_.design_mu, config_.box, *config_.fit),
        envelope::mirror(envelope::front_sat_boundary(vx, config_.design_mu,
                                                      config_.box.mirrored(), model_)),
        envelope::mirror(envelope::yaw_rate_boundary(vx, config_.design_mu,
                                                     config_.box.mirrored(), *config_.fit))};
    q.outer = kInf;
    for (const auto& line : lines) {
      if (line.is_void) continue;
      const double v = line.value(x(kBeta), x(kYawRate));
      if (v < q.outer) {
        q.outer = v;
        if (line.kind == envelope::BoundaryKind::kYawRateMax)
          q.outer_gradient = {0.0, static_cast<double>(line.admissible_sign)};
        else
          q.outer_gradient = {static_cast<double>(line.admissible_sign),
                              -line.admissible_sign * line.slope};
      }
    }
    if (!std::isfinite(q.outer)) q.outer = 1.0;
  } catch (const DomainError&) {
    q.outer = 1.0;
  }
  q.inner = 1.0;
  return q;
}

Rollout Ocp::rollout(const Eigen::VectorXd& z) const {
  Rollout out;
  StateVec x = x_now_;
  out.states.push_back(x);
  for (int k = 0; k < layout_.np; ++k) {
    const InputVec u = input(z, k);
    x = vehicle::rk4_step<double>(x, u, config_.dt, ctx_);
    out.inputs.push_back(u);
    out.states.push_back(x);
    if (layout_.envelope) {
      const envelope::TableQuery q = distances(x);
      out.d_inner.push_back(q.inner);
      out.d_outer.push_back(q.outer);
    }
  }
  return out;
}

bool Ocp::evaluate(const Eigen::VectorXd& z, sqp::Evaluation& out) const {
  using vehicle::kBeta;
  using vehicle::kVx;
  using vehicle::kYawRate;
  const int n = layout_.n_vars();
  const int np = layout_.np;
  const StateVec xr = ref_.state();
  const Eigen::Matrix<double, 5, 1> q(config_.q.data());
  const double cs = config_.cost_scale;

  out.objective = 0.0;
  out.gradient = Eigen::VectorXd::Zero(n);
  const int m = layout_.envelope ? 2 * np : 0;
  out.constraints = Eigen::VectorXd::Zero(m);
  out.jacobian = Eigen::MatrixXd::Zero(m, n);

  StateVec x = x_now_;
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(5, n);  // dx_k / dz
  for (int k = 0; k < np; ++k) {
    const int iu = layout_.input_index(k);
    const InputVec v = z.segment<3>(iu);
    const InputVec u = v.cwiseProduct(scale_);
    vehicle::StepLinearization lin;
    try {
      lin = vehicle::rk4_step_linearized(x, u, config_.dt, ctx_);
    } catch (const DomainError&) {
      return false;
    }
    if (!lin.next.allFinite()) return false;
    Eigen::MatrixXd next = lin.a * sens;
    next.middleCols(iu, 3) += lin.b * scale_.asDiagonal();
    sens.swap(next);
    x = lin.next;

    for (int i = 0; i < 3; ++i) {
      out.objective += cs * config_.r[i] * v(i) * v(i);
      out.gradient(iu + i) += 2.0 * cs * config_.r[i] * v(i);
    }
    const StateVec err = x - xr;
    out.objective += cs * err.dot(q.cwiseProduct(err));
    out.gradient += 2.0 * cs * sens.transpose() * q.cwiseProduct(err);

    if (layout_.envelope) {
      const int is = layout_.slack_index(k + 1);
      const double s = z(is);
      out.objective += cs * config_.w_inner * s * s;
      out.gradient(is) += 2.0 * cs * config_.w_inner * s;
      const envelope::TableQuery d = distances(x);
      Eigen::Matrix<double, 1, 5> gi = Eigen::Matrix<double, 1, 5>::Zero();
      Eigen::Matrix<double, 1, 5> go = Eigen::Matrix<double, 1, 5>::Zero();
      gi(kVx) = d.inner_dvx;
      gi(kBeta) = d.inner_gradient.x;
      gi(kYawRate) = d.inner_gradient.y;
      go(kVx) = d.outer_dvx;
      go(kBeta) = d.outer_gradient.x;
      go(kYawRate) = d.outer_gradient.y;
      out.constraints(2 * k) = -(d.inner + s);
      out.jacobian.row(2 * k) = -gi * sens;
      out.jacobian(2 * k, is) -= 1.0;
      out.constraints(2 * k + 1) = -d.outer;
      out.jacobian.row(2 * k + 1) = -go * sens;
    }
  }
  return true;
}

Eigen::MatrixXd Ocp::gauss_newton(const Eigen::VectorXd& z) const {
  const int n = layout_.n_vars();
  const double cs = config_.cost_scale;
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(n, n);
  const Eigen::Matrix<double, 5, 1> q(config_.q.data());
  StateVec x = x_now_;
  Eigen::MatrixXd sens = Eigen::MatrixXd::Zero(5, n);
  for (int k = 0; k < layout_.np; ++k) {
    const int iu = layout_.input_index(k);
    for (int i = 0; i < 3; ++i) h(iu + i, iu + i) += 2.0 * cs * config_.r[i];
    if (layout_.envelope) {
      const int is = layout_.slack_index(k + 1);
      h(is, is) += 2.0 * cs * config_.w_inner;
    }
    try {
      const vehicle::StepLinearization lin =
          vehicle::rk4_step_linearized(x, input(z, k), config_.dt, ctx_);
      Eigen::MatrixXd next = lin.a * sens;
      next.middleCols(iu, 3) += lin.b * scale_.asDiagonal();
      sens.swap(next);
      x = lin.next;
    } catch (const DomainError&) {
      break;
    }
    h += 2.0 * cs * sens.transpose() * q.asDiagonal() * sens;
  }
  return h;
}

Controller::Controller(NmpcConfig config, DriftReference ref, equilibrium::Model model)
    : config_(std::move(config)), ref_(ref), model_(std::move(model)) {
  config_.validate();
}

void Controller::reset() {
  warm_.resize(0);
  last_.resize(0);
  previous_.reset();
  trace_.clear();
}

ControlCommand Controller::step(const StateVec& x) {
  const Ocp ocp(x, ref_, config_, model_);
  const sqp::NlpProblem& pr = ocp.problem();
  const int n = pr.n_vars;

  // Initial guess: shifted warm start, else the nominal input.
  const auto usable = [&](Eigen::VectorXd z) -> std::optional<Eigen::VectorXd> {
    if (z.size() != n) return std::nullopt;
    z = z.cwiseMax(pr.lower).cwiseMin(pr.upper);
    try {
      const Rollout ro = ocp.rollout(z);
      if (ocp.layout().envelope) {
        for (int k = 1; k <= ocp.layout().np; ++k)
          z(ocp.layout().slack_index(k)) = std::max(0.0, -ro.d_inner[k - 1]);
      }
    } catch (const DomainError&) {
      return std::nullopt;
    }
    return z;
  };
  std::optional<Eigen::VectorXd> z0 = usable(warm_);
  if (!z0) z0 = usable(ocp.constant_input(ref_.u0));
  if (!z0) z0 = usable(ocp.constant_input(InputVec::Zero()));
  if (!z0) throw DomainError("Controller: no initial guess keeps the prediction in the model domain");

  sqp::SqpOptions opt;
  opt.max_iterations = config_.max_sqp_iterations;
  opt.record_trace = record_trace;
  const sqp::NlpSolution sol = sqp::solve_sqp(pr, *z0, opt);
  trace_ = sol.trace;

  ControlCommand cmd;
  cmd.solver_status = sol.status;
  cmd.iterations = sol.iterations;
  cmd.objective = sol.objective;
  cmd.violation = sol.violation;
  cmd.envelope_fallback = ocp.envelope_fallback();
  const bool infeasible = sol.violation > 1e-4;
  if (infeasible && previous_) {
    cmd.u = previous_->u;
    cmd.status = CommandStatus::kHeld;
  } else {
    cmd.u = ocp.input(sol.x, 0);
    cmd.status = sol.status == sqp::SqpStatus::kConverged && !infeasible
                     ? CommandStatus::kConverged
                     : CommandStatus::kDegraded;
  }
  const double fxr_max = ocp.fxr_bound();
  cmd.u(0) = std::clamp(cmd.u(0), config_.box.delta_min, config_.box.delta_max);
  cmd.u(1) = std::clamp(cmd.u(1), -fxr_max, fxr_max);
  cmd.u(2) = std::clamp(cmd.u(2), config_.box.dmz_min, config_.box.dmz_max);
  cmd.torques = torque_allocation(cmd.u, model_.vehicle);

  last_ = sol.x;
  warm_ = sol.x;
  const OcpLayout& lay = ocp.layout();
  for (int k = 0; k + 1 < lay.nc; ++k) warm_.segment<3>(3 * k) = sol.x.segment<3>(3 * (k + 1));
  if (lay.envelope) {
    for (int k = 1; k < lay.np; ++k) warm_(lay.slack_index(k)) = sol.x(lay.slack_index(k + 1));
  }
  previous_ = cmd;
  return cmd;
}

}  // namespace drift::nmpc
