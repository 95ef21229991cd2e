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

#include "drift/qp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/Cholesky>

#include "drift/common.hpp"

namespace drift::qp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Constraint n'x + c >= 0 (or = 0) in the dual method's convention.
struct Row {
  Eigen::VectorXd n;
  double c = 0.0;
};

// Orthogonal factorization state of the active set: J = L^-T Q and the
// upper-triangular R with N_active = Q [R; 0] in the L^-1 metric.
class ActiveSet {
 public:
  explicit ActiveSet(const Eigen::MatrixXd& j_init) : j_(j_init), r_(j_init.rows(), j_init.rows()) {
    r_.setZero();
  }

  int size() const { return q_; }
  const Eigen::MatrixXd& j() const { return j_; }

  // z = J2 d2 (primal step direction), r = R^-1 d1 (dual step direction).
  void directions(const Eigen::VectorXd& np, Eigen::VectorXd& d, Eigen::VectorXd& z,
                  Eigen::VectorXd& r) const {
    const int n = static_cast<int>(j_.rows());
    d = j_.transpose() * np;
    z = j_.rightCols(n - q_) * d.tail(n - q_);
    r.resize(q_);
    for (int i = q_ - 1; i >= 0; --i) {
      double s = d(i);
      for (int k = i + 1; k < q_; ++k) s -= r_(i, k) * r(k);
      r(i) = s / r_(i, i);
    }
  }

  // Appends a constraint with transformed normal d; false on linear dependence.
  bool add(Eigen::VectorXd d) {
    const int n = static_cast<int>(j_.rows());
    for (int k = n - 1; k > q_; --k) {
      double cc = d(k - 1), ss = d(k);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      d(k) = 0.0;
      ss /= h;
      cc /= h;
      if (cc < 0.0) {
        cc = -cc;
        ss = -ss;
        d(k - 1) = -h;
      } else {
        d(k - 1) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int i = 0; i < n; ++i) {
        const double t1 = j_(i, k - 1), t2 = j_(i, k);
        j_(i, k - 1) = t1 * cc + t2 * ss;
        j_(i, k) = xny * (t1 + j_(i, k - 1)) - t2;
      }
    }
    const double scale = std::max(1.0, d.head(q_ + 1).cwiseAbs().maxCoeff());
    if (std::abs(d(q_)) <= 1e-12 * scale) return false;
    r_.col(q_).head(q_ + 1) = d.head(q_ + 1);
    ++q_;
    return true;
  }

  // Removes the active constraint at position `pos`.
  void remove(int pos) {
    const int n = static_cast<int>(j_.rows());
    for (int i = pos; i < q_ - 1; ++i) r_.col(i) = r_.col(i + 1);
    r_.col(q_ - 1).setZero();
    --q_;
    for (int i = pos; i < q_; ++i) {
      double cc = r_(i, i), ss = r_(i + 1, i);
      const double h = std::hypot(cc, ss);
      if (h == 0.0) continue;
      cc /= h;
      ss /= h;
      r_(i + 1, i) = 0.0;
      if (cc < 0.0) {
        r_(i, i) = -h;
        cc = -cc;
        ss = -ss;
      } else {
        r_(i, i) = h;
      }
      const double xny = ss / (1.0 + cc);
      for (int k = i + 1; k < q_; ++k) {
        const double t1 = r_(i, k), t2 = r_(i + 1, k);
        r_(i, k) = t1 * cc + t2 * ss;
        r_(i + 1, k) = xny * (t1 + r_(i, k)) - t2;
      }
      for (int k = 0; k < n; ++k) {
        const double t1 = j_(k, i), t2 = j_(k, i + 1);
        j_(k, i) = t1 * cc + t2 * ss;
        j_(k, i + 1) = xny * (j_(k, i) + t1) - t2;
      }
    }
  }

 private:
  Eigen::MatrixXd j_;
  Eigen::MatrixXd r_;
  int q_ = 0;
};

struct DualResult {
  Eigen::VectorXd x;
  std::vector<double> u;  // multiplier per constraint row (0 when inactive)
  QpStatus status = QpStatus::kOptimal;
  int iterations = 0;
};

// Goldfarb-Idnani for min 1/2 x'Gx + g'x, rows [0, p) equalities and
// [p, p + m) inequalities n'x + c >= 0.
DualResult dual_active_set(const Eigen::LLT<Eigen::MatrixXd>& llt, const Eigen::VectorXd& g,
                           const std::vector<Row>& rows, int p, int max_iterations,
                           double tolerance) {
  const int n = static_cast<int>(g.size());
  const int total = static_cast<int>(rows.size());
  DualResult out;
  out.u.assign(total, 0.0);

  const Eigen::MatrixXd l_inv_t =
      llt.matrixU().solve(Eigen::MatrixXd::Identity(n, n));  // L^-T
  ActiveSet active(l_inv_t);
  std::vector<int> members;  // row index per active position
  std::vector<double> u;     // multiplier per active position
  std::vector<bool> flipped_rows(total, false);  // equality stepped with negated normal

  Eigen::VectorXd x = -llt.solve(g);
  Eigen::VectorXd d, z, r;

  // Adds `row` (index k), stepping until it is satisfied; false when the
  // constraints are infeasible.
  const auto step_toward = [&](const Row& row, int k, bool equality) -> bool {
    double u_new = 0.0;
    for (int guard = 0; guard <= max_iterations; ++guard) {
      ++out.iterations;
      active.directions(row.n, d, z, r);
      const double s = row.n.dot(x) + row.c;
      // Partial step: the first active inequality whose multiplier hits zero.
      double t1 = kInf;
      int drop = -1;
      for (int i = 0; i < active.size(); ++i) {
        if (members[i] < p || r(i) <= 0.0) continue;
        const double ratio = u[i] / r(i);
        if (ratio < t1 || (ratio == t1 && drop >= 0 && members[i] < members[drop])) {
          t1 = ratio;
          drop = i;
        }
      }
      const double zn = z.dot(row.n);
      const double scale = std::max(1.0, row.n.norm());
      double t2 = std::abs(zn) > 1e-14 * scale * scale ? -s / zn : kInf;
      if (equality && t2 < 0.0) t2 = kInf;
      if (!equality && t2 < 0.0) t2 = 0.0;
      double t = std::min(t1, t2);
      if (equality && !std::isfinite(t2)) {
        // Dependent equality: fine when it is already satisfied.
        if (std::abs(s) <= tolerance * scale) return true;
        if (!std::isfinite(t1)) return false;
      }
      if (!std::isfinite(t)) return false;
      if (!std::isfinite(t2)) {
        for (int i = 0; i < active.size(); ++i) u[i] -= t * r(i);
        u_new += t;
        members.erase(members.begin() + drop);
        u.erase(u.begin() + drop);
        active.remove(drop);
        continue;
      }
      x += t * z;
      for (int i = 0; i < active.size(); ++i) u[i] -= t * r(i);
      u_new += t;
      if (t == t2) {
        if (!active.add(d)) return false;
        members.push_back(k);
        u.push_back(u_new);
        return true;
      }
      members.erase(members.begin() + drop);
      u.erase(u.begin() + drop);
      active.remove(drop);
    }
    out.status = QpStatus::kIterationLimit;
    return false;
  };

  for (int k = 0; k < p; ++k) {
    // Equalities may carry either multiplier sign: step with the sign that
    // moves toward the constraint.
    Row row = rows[k];
    const bool flipped = row.n.dot(x) + row.c > 0.0;
    if (flipped) {
      row.n = -row.n;
      row.c = -row.c;
    }
    flipped_rows[k] = flipped;
    if (!step_toward(row, k, true)) {
      if (out.status != QpStatus::kIterationLimit) out.status = QpStatus::kInfeasible;
      out.x = x;
      return out;
    }
  }

  while (true) {
    if (out.iterations > max_iterations) {
      out.status = QpStatus::kIterationLimit;
      break;
    }
    int worst = -1;
    double worst_s = 0.0;
    for (int k = p; k < total; ++k) {
      if (std::find(members.begin(), members.end(), k) != members.end()) continue;
      const double scale = std::max(1.0, rows[k].n.lpNorm<Eigen::Infinity>());
      const double s = (rows[k].n.dot(x) + rows[k].c) / scale;
      if (s < -tolerance && s < worst_s) {
        worst_s = s;
        worst = k;
      }
    }
    if (worst < 0) break;
    if (!step_toward(rows[worst], worst, false)) {
      if (out.status != QpStatus::kIterationLimit) out.status = QpStatus::kInfeasible;
      break;
    }
  }
  out.x = x;
  for (std::size_t i = 0; i < members.size(); ++i)
    out.u[members[i]] = flipped_rows[members[i]] ? -u[i] : u[i];
  return out;
}

}  // namespace

QpProblem QpProblem::unconstrained(const Eigen::MatrixXd& h, const Eigen::VectorXd& g) {
  QpProblem p;
  p.h = h;
  p.g = g;
  p.a_eq.resize(0, g.size());
  p.b_eq.resize(0);
  p.a_in.resize(0, g.size());
  p.b_in.resize(0);
  return p;
}

void QpProblem::validate() const {
  const Eigen::Index nn = g.size();
  if (h.rows() != nn || h.cols() != nn) throw ConfigError("QpProblem: H must be n x n");
  if (a_eq.cols() != nn && a_eq.rows() > 0) throw ConfigError("QpProblem: A_eq must have n columns");
  if (a_eq.rows() != b_eq.size()) throw ConfigError("QpProblem: A_eq / b_eq size mismatch");
  if (a_in.cols() != nn && a_in.rows() > 0) throw ConfigError("QpProblem: A_in must have n columns");
  if (a_in.rows() != b_in.size()) throw ConfigError("QpProblem: A_in / b_in size mismatch");
  if ((lo.size() != 0 && lo.size() != nn) || (hi.size() != 0 && hi.size() != nn))
    throw ConfigError("QpProblem: bounds must be empty or have n entries");
  if (!h.allFinite() || !g.allFinite()) throw ConfigError("QpProblem: non-finite H or g");
}

const char* to_string(QpStatus s) {
  switch (s) {
    case QpStatus::kOptimal:
      return "optimal";
    case QpStatus::kInfeasible:
      return "infeasible";
    case QpStatus::kIterationLimit:
      return "iteration_limit";
  }
  return "unknown";
}

double constraint_violation(const QpProblem& pr, const Eigen::VectorXd& x) {
  double v = 0.0;
  if (pr.a_eq.rows() > 0) v = std::max(v, (pr.a_eq * x - pr.b_eq).lpNorm<Eigen::Infinity>());
  if (pr.a_in.rows() > 0) v = std::max(v, (pr.a_in * x - pr.b_in).maxCoeff());
  for (Eigen::Index i = 0; i < pr.lo.size(); ++i) v = std::max(v, pr.lo(i) - x(i));
  for (Eigen::Index i = 0; i < pr.hi.size(); ++i) v = std::max(v, x(i) - pr.hi(i));
  return v;
}

QpResult qp_solve(const QpProblem& pr, const QpOptions& options) {
  pr.validate();
  const int n = pr.n();
  const int p = static_cast<int>(pr.a_eq.rows());
  const int m = static_cast<int>(pr.a_in.rows());

  QpResult out;
  Eigen::MatrixXd h = 0.5 * (pr.h + pr.h.transpose());
  Eigen::LLT<Eigen::MatrixXd> llt(h);
  double lambda = 0.0;
  for (double reg = 1e-8; llt.info() != Eigen::Success; reg *= 2.0) {
    if (reg > 1e12) throw ConfigError("qp_solve: H cannot be regularized to positive definite");
    lambda = reg;
    llt.compute(h + reg * Eigen::MatrixXd::Identity(n, n));
  }
  out.regularization = lambda;
  if (lambda > 0.0) h += lambda * Eigen::MatrixXd::Identity(n, n);

  std::vector<Row> rows;
  std::vector<int> bound_index;  // variable per bound row, sign encodes lo (+) / hi (-)
  rows.reserve(p + m + 2 * n);
  for (int i = 0; i < p; ++i) rows.push_back({pr.a_eq.row(i).transpose(), -pr.b_eq(i)});
  for (int i = 0; i < m; ++i) rows.push_back({-pr.a_in.row(i).transpose(), pr.b_in(i)});
  for (int i = 0; i < static_cast<int>(pr.lo.size()); ++i) {
    if (!std::isfinite(pr.lo(i))) continue;
    rows.push_back({Eigen::VectorXd::Unit(n, i), -pr.lo(i)});
    bound_index.push_back(i + 1);
  }
  for (int i = 0; i < static_cast<int>(pr.hi.size()); ++i) {
    if (!std::isfinite(pr.hi(i))) continue;
    rows.push_back({-Eigen::VectorXd::Unit(n, i), pr.hi(i)});
    bound_index.push_back(-(i + 1));
  }
  const int total = static_cast<int>(rows.size());
  const int cap =
      options.max_iterations > 0 ? options.max_iterations : 10 * (n + total) + 50;

  const DualResult dr = dual_active_set(llt, pr.g, rows, p, cap, options.feasibility_tolerance);
  out.status = dr.status;
  out.iterations = dr.iterations;
  out.x = dr.x;
  out.lambda_eq = Eigen::VectorXd::Zero(p);
  out.lambda_in = Eigen::VectorXd::Zero(m);
  out.lambda_lo = Eigen::VectorXd::Zero(n);
  out.lambda_hi = Eigen::VectorXd::Zero(n);
  for (int i = 0; i < p; ++i) out.lambda_eq(i) = -dr.u[i];
  for (int i = 0; i < m; ++i) out.lambda_in(i) = dr.u[p + i];
  for (int k = p + m; k < total; ++k) {
    const int b = bound_index[k - p - m];
    if (b > 0)
      out.lambda_lo(b - 1) = dr.u[k];
    else
      out.lambda_hi(-b - 1) = dr.u[k];
  }

  if (out.status == QpStatus::kIterationLimit) {
    // Projected-gradient fallback from the last iterate.
    Eigen::VectorXd step = out.x - (h * out.x + pr.g) / std::max(1.0, h.norm());
    for (int i = 0; i < n; ++i) {
      if (i < pr.lo.size() && std::isfinite(pr.lo(i))) step(i) = std::max(step(i), pr.lo(i));
      if (i < pr.hi.size() && std::isfinite(pr.hi(i))) step(i) = std::min(step(i), pr.hi(i));
    }
    out.x = step;
  }
  out.objective = 0.5 * out.x.dot(pr.h * out.x) + pr.g.dot(out.x);
  return out;
}

}  // namespace drift::qp
