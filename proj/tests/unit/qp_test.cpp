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

#include <algorithm>
#include <optional>
#include <random>
#include <vector>

#include <Eigen/Dense>
#include <gtest/gtest.h>

#include "drift/common.hpp"
#include "drift/qp.hpp"

namespace drift::qp {
namespace {

// Minimum over all active sets whose KKT system yields a feasible point with
// nonnegative inequality multipliers.
std::optional<Eigen::VectorXd> enumerate(const QpProblem& p) {
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

QpProblem random_problem(std::mt19937_64& rng, int n, int pe, int m) {
  std::normal_distribution<double> normal;
  const auto fill = [&](Eigen::MatrixXd& a) {
    for (Eigen::Index i = 0; i < a.size(); ++i) a.data()[i] = normal(rng);
  };
  Eigen::MatrixXd root(n, n);
  fill(root);
  QpProblem p;
  p.h = root * root.transpose() + 0.1 * Eigen::MatrixXd::Identity(n, n);
  p.g = Eigen::VectorXd(n);
  for (int i = 0; i < n; ++i) p.g(i) = normal(rng);
  p.a_eq.resize(pe, n);
  p.a_in.resize(m, n);
  fill(p.a_eq);
  fill(p.a_in);
  p.b_eq = Eigen::VectorXd(pe);
  p.b_in = Eigen::VectorXd(m);
  for (int i = 0; i < pe; ++i) p.b_eq(i) = normal(rng);
  for (int i = 0; i < m; ++i) p.b_in(i) = normal(rng);
  return p;
}

TEST(Qp, UnconstrainedSolvesTheNormalEquations) {
  Eigen::Matrix2d h;
  h << 4, 1, 1, 3;
  const QpResult r = qp_solve(QpProblem::unconstrained(h, Eigen::Vector2d(1, 2)));
  EXPECT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_LT((h * r.x + Eigen::Vector2d(1, 2)).norm(), 1e-12);
}

TEST(Qp, BoundsAndTheirMultipliers) {
  QpProblem p = QpProblem::unconstrained(Eigen::Matrix2d::Identity(), Eigen::Vector2d(-3, 0.5));
  p.lo = Eigen::Vector2d(-1, -1);
  p.hi = Eigen::Vector2d(1, 1);
  const QpResult r = qp_solve(p);
  ASSERT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_NEAR(r.x(0), 1.0, 1e-12);
  EXPECT_NEAR(r.x(1), -0.5, 1e-12);
  EXPECT_NEAR(r.lambda_hi(0), 2.0, 1e-12);
  EXPECT_NEAR(r.lambda_lo(0), 0.0, 1e-12);
  EXPECT_NEAR(r.lambda_lo(1), 0.0, 1e-12);
}

TEST(Qp, DetectsInfeasibility) {
  QpProblem p = QpProblem::unconstrained(Eigen::Matrix2d::Identity(), Eigen::Vector2d::Zero());
  p.a_in.resize(2, 2);
  p.a_in << 1, 0, -1, 0;
  p.b_in = Eigen::Vector2d(-1, -1);  // x0 <= -1 and x0 >= 1
  EXPECT_EQ(qp_solve(p).status, QpStatus::kInfeasible);
}

TEST(Qp, SingularHessianIsRegularized) {
  QpProblem p = QpProblem::unconstrained(Eigen::Matrix2d::Zero(), Eigen::Vector2d(1, -1));
  p.lo = Eigen::Vector2d(-2, -2);
  p.hi = Eigen::Vector2d(2, 2);
  const QpResult r = qp_solve(p);
  EXPECT_EQ(r.status, QpStatus::kOptimal);
  EXPECT_GT(r.regularization, 0.0);
  EXPECT_NEAR(r.x(0), -2.0, 1e-6);
  EXPECT_NEAR(r.x(1), 2.0, 1e-6);
}

TEST(Qp, MatchesEnumerationOracle) {
  std::mt19937_64 rng(11);
  int compared = 0;
  for (int t = 0; t < 1500; ++t) {
    const int n = 1 + static_cast<int>(rng() % 5);
    const int pe = static_cast<int>(rng() % std::min(n, 3));
    const int m = std::min(static_cast<int>(rng() % 7), 6 - pe);
    QpProblem p = random_problem(rng, n, pe, m);
    if (t % 3 == 0 && m > 1) {
      p.a_in.row(m - 1) = 2.0 * p.a_in.row(0);
      p.b_in(m - 1) = 2.0 * p.b_in(0);
    }
    const std::optional<Eigen::VectorXd> oracle = enumerate(p);
    const QpResult r = qp_solve(p);
    if (!oracle) continue;
    ++compared;
    ASSERT_EQ(r.status, QpStatus::kOptimal) << "trial " << t;
    const double scale = std::max(1.0, oracle->lpNorm<Eigen::Infinity>());
    EXPECT_LE((r.x - *oracle).lpNorm<Eigen::Infinity>(), 1e-8 * scale) << "trial " << t;
    const Eigen::VectorXd stationarity =
        p.h * r.x + p.g + p.a_eq.transpose() * r.lambda_eq + p.a_in.transpose() * r.lambda_in;
    EXPECT_LE(stationarity.lpNorm<Eigen::Infinity>(), 1e-8) << "trial " << t;
    if (m > 0) {
      EXPECT_GE(r.lambda_in.minCoeff(), -1e-12);
    }
  }
  EXPECT_GT(compared, 1000);
}

TEST(Qp, RejectsInconsistentDimensions) {
  QpProblem p = QpProblem::unconstrained(Eigen::Matrix2d::Identity(), Eigen::Vector3d::Zero());
  EXPECT_THROW(qp_solve(p), ConfigError);
}

}  // namespace
}  // namespace drift::qp
