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

// Sequential quadratic programming with a damped-BFGS Hessian, QP
// subproblems over the linearized constraints and bounds, and an L1 merit
// backtracking line search.

#ifndef DRIFT_SQP_HPP_
#define DRIFT_SQP_HPP_

#include <functional>
#include <string>
#include <vector>

#include <Eigen/Core>

namespace drift::sqp {

enum class ConstraintKind { kEquality, kInequality };  // c(x) = 0 or c(x) <= 0

struct Evaluation {
  double objective = 0.0;
  Eigen::VectorXd gradient;
  Eigen::VectorXd constraints;  // one entry per NlpProblem::kinds
  Eigen::MatrixXd jacobian;     // constraints x n
};

struct NlpProblem {
  int n_vars = 0;
  std::vector<ConstraintKind> kinds;
  Eigen::VectorXd lower;  // empty or n_vars entries (+-inf allowed)
  Eigen::VectorXd upper;
  // Fills value and derivatives at x; false (or non-finite output) marks x
  // as outside the problem's domain.
  std::function<bool(const Eigen::VectorXd& x, Evaluation& out)> evaluate;
  // Optional initial Hessian (e.g. Gauss-Newton); otherwise a central
  // difference Hessian of the objective, with eigenvalues floored to keep it
  // positive definite.
  std::function<Eigen::MatrixXd(const Eigen::VectorXd& x)> initial_hessian;

  int n_constraints() const { return static_cast<int>(kinds.size()); }
  void validate() const;  // throws ConfigError
};

enum class SqpStatus { kConverged, kMaxIter, kLineSearchFail };
const char* to_string(SqpStatus s);

struct SqpOptions {
  int max_iterations = 100;
  double kkt_tolerance = 1e-6;          // stationarity and complementarity, scaled
  double feasibility_tolerance = 1e-6;  // absolute constraint violation
  double elastic_penalty = 1e4;
  double armijo = 1e-4;
  int max_backtracks = 30;
  bool record_trace = false;
};

struct TraceRow {
  int iteration = 0;
  double objective = 0.0;
  double merit_before = 0.0;  // merit at the iterate, this iteration's penalty
  double merit_after = 0.0;   // merit at the accepted point, same penalty
  double violation = 0.0;
  double kkt = 0.0;
  double step = 0.0;  // accepted step length
  double penalty = 0.0;
  double regularization = 0.0;
  bool elastic = false;
  bool hessian_reset = false;
};

struct NlpSolution {
  Eigen::VectorXd x;
  double objective = 0.0;
  double violation = 0.0;  // infinity norm over constraints and bounds
  double kkt = 0.0;
  int iterations = 0;
  SqpStatus status = SqpStatus::kMaxIter;
  Eigen::VectorXd multipliers;  // per constraint (>= 0 for inequalities)
  Eigen::VectorXd bound_multipliers;  // upper minus lower bound multipliers
  std::vector<TraceRow> trace;
};

// x0 must lie within the bounds and inside the evaluate domain; throws
// DomainError otherwise.
NlpSolution solve_sqp(const NlpProblem& problem, const Eigen::VectorXd& x0,
                      const SqpOptions& options = {});

// Trace rows as CSV (header plus one line per iteration).
std::string trace_csv(const std::vector<TraceRow>& trace);

struct DerivativeEntry {
  int row = 0;  // -1 for the objective gradient
  int col = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double relative_error = 0.0;
};

struct DerivativeReport {
  double max_relative_error = 0.0;
  std::vector<DerivativeEntry> flagged;  // entries above the threshold
};

// Central differences with step h * max(1, |x_i|); relative error
// |a - fd| / max(1, |a|, |fd|).
DerivativeReport check_derivatives(const NlpProblem& problem, const Eigen::VectorXd& x,
                                   double h = 1e-6, double threshold = 1e-4);

}  // namespace drift::sqp

#endif  // DRIFT_SQP_HPP_
