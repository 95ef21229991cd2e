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

#include "drift/sqp.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>

#include <Eigen/Eigenvalues>

#include "drift/common.hpp"
#include "drift/qp.hpp"

namespace drift::sqp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool evaluate_checked(const NlpProblem& pr, const Eigen::VectorXd& x, Evaluation& ev) {
  if (!pr.evaluate(x, ev)) return false;
  const int m = pr.n_constraints();
  if (ev.gradient.size() != pr.n_vars || ev.constraints.size() != m ||
      ev.jacobian.rows() != m || (m > 0 && ev.jacobian.cols() != pr.n_vars))
    throw ConfigError("NlpProblem: evaluate returned inconsistent dimensions");
  return std::isfinite(ev.objective) && ev.gradient.allFinite() && ev.constraints.allFinite() &&
         ev.jacobian.allFinite();
}

double lower_of(const NlpProblem& pr, int i) { return pr.lower.size() ? pr.lower(i) : -kInf; }
double upper_of(const NlpProblem& pr, int i) { return pr.upper.size() ? pr.upper(i) : kInf; }

// L1 infeasibility of constraint values c.
double l1_infeasibility(const NlpProblem& pr, const Eigen::VectorXd& c) {
  double s = 0.0;
  for (int i = 0; i < pr.n_constraints(); ++i)
    s += pr.kinds[i] == ConstraintKind::kEquality ? std::abs(c(i)) : std::max(0.0, c(i));
  return s;
}

double violation(const NlpProblem& pr, const Eigen::VectorXd& x, const Eigen::VectorXd& c) {
  double v = 0.0;
  for (int i = 0; i < pr.n_constraints(); ++i)
    v = std::max(v, pr.kinds[i] == ConstraintKind::kEquality ? std::abs(c(i)) : c(i));
  for (int i = 0; i < pr.n_vars; ++i)
    v = std::max({v, lower_of(pr, i) - x(i), x(i) - upper_of(pr, i)});
  return v;
}

Eigen::VectorXd lagrangian_gradient(const Evaluation& ev, const Eigen::VectorXd& lambda,
                                    const Eigen::VectorXd& bound_lambda) {
  Eigen::VectorXd g = ev.gradient + bound_lambda;
  if (lambda.size() > 0) g += ev.jacobian.transpose() * lambda;
  return g;
}

// Scaled stationarity plus complementarity.
double kkt_residual(const NlpProblem& pr, const Eigen::VectorXd& x, const Evaluation& ev,
                    const Eigen::VectorXd& lambda, const Eigen::VectorXd& bound_lambda) {
  const double scale = std::max(1.0, ev.gradient.lpNorm<Eigen::Infinity>());
  double r = lagrangian_gradient(ev, lambda, bound_lambda).lpNorm<Eigen::Infinity>() / scale;
  for (int i = 0; i < pr.n_constraints(); ++i) {
    if (pr.kinds[i] == ConstraintKind::kInequality)
      r = std::max(r, std::abs(lambda(i) * ev.constraints(i)) / scale);
  }
  for (int i = 0; i < pr.n_vars; ++i) {
    const double gap = bound_lambda(i) > 0.0 ? upper_of(pr, i) - x(i) : x(i) - lower_of(pr, i);
    if (bound_lambda(i) != 0.0) r = std::max(r, std::abs(bound_lambda(i) * gap) / scale);
  }
  return r;
}

Eigen::MatrixXd make_positive_definite(const Eigen::MatrixXd& h) {
  const Eigen::MatrixXd sym = 0.5 * (h + h.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sym);
  Eigen::VectorXd ev = es.eigenvalues();
  const double top = std::max(1.0, ev.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < ev.size(); ++i) ev(i) = std::max(std::abs(ev(i)), 1e-6 * top);
  return es.eigenvectors() * ev.asDiagonal() * es.eigenvectors().transpose();
}

Eigen::MatrixXd difference_hessian(const NlpProblem& pr, const Eigen::VectorXd& x) {
  const int n = pr.n_vars;
  Eigen::MatrixXd h = Eigen::MatrixXd::Identity(n, n);
  Evaluation ep, em;
  for (int i = 0; i < n; ++i) {
    const double step = 1e-5 * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    if (!evaluate_checked(pr, xp, ep) || !evaluate_checked(pr, xm, em)) return h;
    h.col(i) = (ep.gradient - em.gradient) / (2.0 * step);
  }
  return h;
}

struct Subproblem {
  Eigen::VectorXd d;
  Eigen::VectorXd lambda;
  Eigen::VectorXd bound_lambda;
  double regularization = 0.0;
  bool elastic = false;
};

Subproblem solve_subproblem(const NlpProblem& pr, const Eigen::VectorXd& x, const Evaluation& ev,
                            const Eigen::MatrixXd& b, double elastic_penalty) {
  const int n = pr.n_vars;
  const int m = pr.n_constraints();
  std::vector<int> eq, in;
  for (int i = 0; i < m; ++i) (pr.kinds[i] == ConstraintKind::kEquality ? eq : in).push_back(i);
  const int ne = static_cast<int>(eq.size()), ni = static_cast<int>(in.size());

  Eigen::VectorXd lo(n), hi(n);
  for (int i = 0; i < n; ++i) {
    lo(i) = lower_of(pr, i) - x(i);
    hi(i) = upper_of(pr, i) - x(i);
  }

  qp::QpProblem q;
  q.h = b;
  q.g = ev.gradient;
  q.a_eq.resize(ne, n);
  q.b_eq.resize(ne);
  q.a_in.resize(ni, n);
  q.b_in.resize(ni);
  for (int k = 0; k < ne; ++k) {
    q.a_eq.row(k) = ev.jacobian.row(eq[k]);
    q.b_eq(k) = -ev.constraints(eq[k]);
  }
  for (int k = 0; k < ni; ++k) {
    q.a_in.row(k) = ev.jacobian.row(in[k]);
    q.b_in(k) = -ev.constraints(in[k]);
  }
  q.lo = lo;
  q.hi = hi;

  Subproblem out;
  qp::QpResult r = qp::qp_solve(q);
  if (r.status == qp::QpStatus::kInfeasible) {
    // Elastic mode: J d + c = v - w (equalities), J d + c <= v (inequalities).
    out.elastic = true;
    const int ns = 2 * ne + ni;
    const int nt = n + ns;
    qp::QpProblem e;
    e.h = Eigen::MatrixXd::Zero(nt, nt);
    e.h.topLeftCorner(n, n) = b;
    e.h.bottomRightCorner(ns, ns) = 1e-8 * Eigen::MatrixXd::Identity(ns, ns);
    e.g = Eigen::VectorXd::Constant(nt, elastic_penalty);
    e.g.head(n) = ev.gradient;
    e.a_eq = Eigen::MatrixXd::Zero(ne, nt);
    e.a_eq.leftCols(n) = q.a_eq;
    for (int k = 0; k < ne; ++k) {
      e.a_eq(k, n + 2 * k) = -1.0;
      e.a_eq(k, n + 2 * k + 1) = 1.0;
    }
    e.b_eq = q.b_eq;
    e.a_in = Eigen::MatrixXd::Zero(ni, nt);
    e.a_in.leftCols(n) = q.a_in;
    for (int k = 0; k < ni; ++k) e.a_in(k, n + 2 * ne + k) = -1.0;
    e.b_in = q.b_in;
    e.lo = Eigen::VectorXd::Zero(nt);
    e.hi = Eigen::VectorXd::Constant(nt, kInf);
    e.lo.head(n) = lo;
    e.hi.head(n) = hi;
    r = qp::qp_solve(e);
    r.x.conservativeResize(n);
    r.lambda_lo.conservativeResize(n);
    r.lambda_hi.conservativeResize(n);
  }
  out.d = r.x;
  out.regularization = r.regularization;
  out.lambda = Eigen::VectorXd::Zero(m);
  for (int k = 0; k < ne; ++k) out.lambda(eq[k]) = r.lambda_eq(k);
  for (int k = 0; k < ni; ++k) out.lambda(in[k]) = r.lambda_in(k);
  out.bound_lambda = r.lambda_hi - r.lambda_lo;
  return out;
}

}  // namespace

void NlpProblem::validate() const {
  if (n_vars <= 0) throw ConfigError("NlpProblem: n_vars must be positive");
  if (!evaluate) throw ConfigError("NlpProblem: evaluate callback missing");
  if ((lower.size() != 0 && lower.size() != n_vars) ||
      (upper.size() != 0 && upper.size() != n_vars))
    throw ConfigError("NlpProblem: bounds must be empty or have n_vars entries");
  for (int i = 0; i < n_vars; ++i) {
    const double l = lower.size() ? lower(i) : -kInf;
    const double u = upper.size() ? upper(i) : kInf;
    if (!(l <= u)) throw ConfigError("NlpProblem: lower bound above upper bound");
  }
}

const char* to_string(SqpStatus s) {
  switch (s) {
    case SqpStatus::kConverged:
      return "converged";
    case SqpStatus::kMaxIter:
      return "max_iter";
    case SqpStatus::kLineSearchFail:
      return "line_search_fail";
  }
  return "unknown";
}

NlpSolution solve_sqp(const NlpProblem& pr, const Eigen::VectorXd& x0, const SqpOptions& opt) {
  pr.validate();
  const int n = pr.n_vars;
  const int m = pr.n_constraints();
  if (x0.size() != n) throw ConfigError("solve_sqp: x0 has the wrong size");
  for (int i = 0; i < n; ++i) {
    if (!(x0(i) >= lower_of(pr, i) && x0(i) <= upper_of(pr, i)))
      throw DomainError("solve_sqp: x0 violates the variable bounds at index " +
                        std::to_string(i));
  }

  Eigen::VectorXd x = x0;
  Evaluation ev;
  if (!evaluate_checked(pr, x, ev))
    throw DomainError("solve_sqp: callbacks failed or returned non-finite values at x0");

  Eigen::MatrixXd b =
      make_positive_definite(pr.initial_hessian ? pr.initial_hessian(x) : difference_hessian(pr, x));
  Eigen::VectorXd lambda = Eigen::VectorXd::Zero(m);
  Eigen::VectorXd bound_lambda = Eigen::VectorXd::Zero(n);
  double penalty = 1.0;

  NlpSolution sol;
  sol.status = SqpStatus::kMaxIter;
  int it = 0;
  for (;; ++it) {
    const double kkt = kkt_residual(pr, x, ev, lambda, bound_lambda);
    const double viol = violation(pr, x, ev.constraints);
    if (kkt <= opt.kkt_tolerance && viol <= opt.feasibility_tolerance) {
      sol.status = SqpStatus::kConverged;
      break;
    }
    if (it >= opt.max_iterations) break;

    const Subproblem sp = solve_subproblem(pr, x, ev, b, opt.elastic_penalty);
    const double lambda_norm =
        std::max(sp.lambda.size() ? sp.lambda.lpNorm<Eigen::Infinity>() : 0.0, 0.0);
    if (penalty < 1.1 * lambda_norm) penalty = 1.1 * lambda_norm + 1e-3;

    const double theta = l1_infeasibility(pr, ev.constraints);
    Eigen::VectorXd c_lin = ev.constraints;
    if (m > 0) c_lin += ev.jacobian * sp.d;
    const double slope =
        ev.gradient.dot(sp.d) + penalty * (l1_infeasibility(pr, c_lin) - theta);
    const double merit0 = ev.objective + penalty * theta;

    double alpha = 1.0;
    bool accepted = false;
    Evaluation trial;
    Eigen::VectorXd x_trial;
    double merit1 = merit0;
    for (int k = 0; k <= opt.max_backtracks; ++k, alpha *= 0.5) {
      x_trial = x + alpha * sp.d;
      for (int i = 0; i < n; ++i)
        x_trial(i) = std::clamp(x_trial(i), lower_of(pr, i), upper_of(pr, i));
      if (!evaluate_checked(pr, x_trial, trial)) continue;
      merit1 = trial.objective + penalty * l1_infeasibility(pr, trial.constraints);
      if (merit1 <= merit0 + opt.armijo * alpha * std::min(slope, 0.0)) {
        accepted = true;
        break;
      }
    }

    TraceRow row;
    row.iteration = it;
    row.objective = ev.objective;
    row.merit_before = merit0;
    row.violation = viol;
    row.kkt = kkt;
    row.penalty = penalty;
    row.regularization = sp.regularization;
    row.elastic = sp.elastic;

    if (!accepted) {
      row.merit_after = merit0;
      if (opt.record_trace) sol.trace.push_back(row);
      sol.status = SqpStatus::kLineSearchFail;
      break;
    }

    // Damped BFGS on the Lagrangian with the new multipliers.
    const Eigen::VectorXd s = x_trial - x;
    const Eigen::VectorXd y = lagrangian_gradient(trial, sp.lambda, sp.bound_lambda) -
                              lagrangian_gradient(ev, sp.lambda, sp.bound_lambda);
    const Eigen::VectorXd bs = b * s;
    const double sbs = s.dot(bs);
    const double sy = s.dot(y);
    bool reset = false;
    if (s.norm() > 0.0) {
      if (!(sbs > 1e-16 * std::max(1.0, s.squaredNorm()))) {
        reset = true;
      } else {
        const double theta_d = sy >= 0.2 * sbs ? 1.0 : 0.8 * sbs / (sbs - sy);
        const Eigen::VectorXd r = theta_d * y + (1.0 - theta_d) * bs;
        const Eigen::MatrixXd next = b - bs * bs.transpose() / sbs + r * r.transpose() / s.dot(r);
        if (next.allFinite())
          b = next;
        else
          reset = true;
      }
      if (reset) {
        const double gamma = sy > 0.0 ? y.squaredNorm() / sy : 1.0;
        b = std::clamp(gamma, 1e-8, 1e8) * Eigen::MatrixXd::Identity(n, n);
      }
    }

    row.step = alpha;
    row.merit_after = merit1;
    row.hessian_reset = reset;
    if (opt.record_trace) sol.trace.push_back(row);

    x = x_trial;
    ev = trial;
    lambda = sp.lambda;
    bound_lambda = sp.bound_lambda;
  }

  sol.x = x;
  sol.objective = ev.objective;
  sol.violation = violation(pr, x, ev.constraints);
  sol.kkt = kkt_residual(pr, x, ev, lambda, bound_lambda);
  sol.iterations = it;
  sol.multipliers = lambda;
  sol.bound_multipliers = bound_lambda;
  return sol;
}

std::string trace_csv(const std::vector<TraceRow>& trace) {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "iteration,objective,merit_before,merit_after,violation,kkt,step,penalty,"
        "regularization,elastic,hessian_reset\n";
  for (const TraceRow& r : trace) {
    os << r.iteration << ',' << r.objective << ',' << r.merit_before << ',' << r.merit_after
       << ',' << r.violation << ',' << r.kkt << ',' << r.step << ',' << r.penalty << ','
       << r.regularization << ',' << (r.elastic ? 1 : 0) << ',' << (r.hessian_reset ? 1 : 0)
       << '\n';
  }
  return os.str();
}

DerivativeReport check_derivatives(const NlpProblem& pr, const Eigen::VectorXd& x, double h,
                                   double threshold) {
  pr.validate();
  const int n = pr.n_vars;
  const int m = pr.n_constraints();
  Evaluation ev, ep, em;
  if (!evaluate_checked(pr, x, ev))
    throw DomainError("check_derivatives: callbacks failed at the base point");
  DerivativeReport report;
  const auto record = [&](int row, int col, double a, double fd) {
    const double err = std::abs(a - fd) / std::max({1.0, std::abs(a), std::abs(fd)});
    report.max_relative_error = std::max(report.max_relative_error, err);
    if (err > threshold) report.flagged.push_back({row, col, a, fd, err});
  };
  for (int i = 0; i < n; ++i) {
    const double step = h * std::max(1.0, std::abs(x(i)));
    Eigen::VectorXd xp = x, xm = x;
    xp(i) += step;
    xm(i) -= step;
    if (!evaluate_checked(pr, xp, ep) || !evaluate_checked(pr, xm, em))
      throw DomainError("check_derivatives: callbacks failed at a perturbed point");
    record(-1, i, ev.gradient(i), (ep.objective - em.objective) / (2.0 * step));
    for (int k = 0; k < m; ++k)
      record(k, i, ev.jacobian(k, i), (ep.constraints(k) - em.constraints(k)) / (2.0 * step));
  }
  return report;
}

}  // namespace drift::sqp
