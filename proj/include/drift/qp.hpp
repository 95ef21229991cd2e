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

// Dense convex QP solver (Goldfarb-Idnani dual active set):
//
//   min 1/2 d'Hd + g'd  s.t.  A_eq d = b_eq,  A_in d <= b_in,  lo <= d <= hi.

#ifndef DRIFT_QP_HPP_
#define DRIFT_QP_HPP_

#include <Eigen/Core>

namespace drift::qp {

struct QpProblem {
  Eigen::MatrixXd h;
  Eigen::VectorXd g;
  Eigen::MatrixXd a_eq;  // p x n (may have zero rows)
  Eigen::VectorXd b_eq;
  Eigen::MatrixXd a_in;  // m x n (may have zero rows)
  Eigen::VectorXd b_in;
  Eigen::VectorXd lo;  // empty or n entries; -inf disables a bound
  Eigen::VectorXd hi;

  // Unconstrained problem with zero-row constraint blocks.
  static QpProblem unconstrained(const Eigen::MatrixXd& h, const Eigen::VectorXd& g);
  int n() const { return static_cast<int>(g.size()); }
  void validate() const;  // throws ConfigError on inconsistent dimensions
};

enum class QpStatus {
  kOptimal,
  kInfeasible,      // no point satisfies the constraints
  kIterationLimit,  // projected-gradient fallback step returned
};
const char* to_string(QpStatus s);

// Multipliers of the Lagrangian
//   L = 1/2 d'Hd + g'd + l_eq'(A_eq d - b_eq) + l_in'(A_in d - b_in)
//       + l_hi'(d - hi) + l_lo'(lo - d),
// with l_in, l_lo, l_hi >= 0.
struct QpResult {
  Eigen::VectorXd x;
  Eigen::VectorXd lambda_eq;
  Eigen::VectorXd lambda_in;
  Eigen::VectorXd lambda_lo;
  Eigen::VectorXd lambda_hi;
  QpStatus status = QpStatus::kOptimal;
  int iterations = 0;
  double objective = 0.0;
  double regularization = 0.0;  // lambda added to H's diagonal
};

struct QpOptions {
  int max_iterations = 0;  // 0: 10 (n + constraints) + 50
  double feasibility_tolerance = 1e-10;
};

// H is regularized with lambda I, lambda doubling from 1e-8, until its
// Cholesky factorization succeeds.
QpResult qp_solve(const QpProblem& problem, const QpOptions& options = {});

// Largest violation of the problem's constraints at x (0 when feasible).
double constraint_violation(const QpProblem& problem, const Eigen::VectorXd& x);

}  // namespace drift::qp

#endif  // DRIFT_QP_HPP_
