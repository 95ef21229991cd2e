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

#include "drift/saddle_fit.hpp"

#include <cmath>
#include <limits>
#include <random>

#include <Eigen/Core>
#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

namespace drift::saddle {

namespace {

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(n);
  for (int i = 0; i < n; ++i) v[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

constexpr int kFreeParams = 8;  // p3..p6, c7, c8, c10, c11

Parameters from_free(const Eigen::VectorXd& theta, double p1, double p2) {
  Parameters p{};
  p[0] = p1;
  p[1] = p2;
  p[2] = theta(0);
  p[3] = theta(1);
  p[4] = theta(2);
  p[5] = theta(3);
  p[6] = theta(4);
  p[7] = theta(4) != 0.0 ? theta(5) / theta(4) : 0.0;
  p[8] = 0.0;
  p[9] = theta(6);
  p[10] = theta(6) != 0.0 ? theta(7) / theta(6) : 0.0;
  p[11] = 0.0;
  return p;
}

struct ResidualFunctor {
  using Scalar = double;
  enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };
  using InputType = Eigen::VectorXd;
  using ValueType = Eigen::VectorXd;
  using JacobianType = Eigen::MatrixXd;

  const std::vector<SaddleSample>* rows = nullptr;
  double p1 = 0.0, p2 = 0.0, lf = 0.0, gravity = 0.0;
  double sigma_beta = 1.0, sigma_r = 1.0;

  int inputs() const { return kFreeParams; }
  int values() const { return static_cast<int>(2 * rows->size()); }

  int operator()(const Eigen::VectorXd& theta, Eigen::VectorXd& fvec) const {
    const Parameters p = from_free(theta, p1, p2);
    for (std::size_t i = 0; i < rows->size(); ++i) {
      const SaddleSample& s = (*rows)[i];
      const SaddlePrediction pr = evaluate_parameters(p, lf, gravity, s.mu, s.vx, s.delta, s.dmz);
      const double beta = s.branch == 1 ? pr.beta_s1 : pr.beta_s2;
      const double r = s.branch == 1 ? pr.r_s1 : pr.r_s2;
      double rb = (beta - s.beta) / sigma_beta;
      double rr = (r - s.r) / sigma_r;
      if (!std::isfinite(rb)) rb = 1e6;
      if (!std::isfinite(rr)) rr = 1e6;
      fvec(2 * i) = rb;
      fvec(2 * i + 1) = rr;
    }
    return 0;
  }
};

double stddev(const std::vector<SaddleSample>& rows, double SaddleSample::*field) {
  double mean = 0.0;
  for (const auto& s : rows) mean += s.*field;
  mean /= rows.size();
  double var = 0.0;
  for (const auto& s : rows) var += (s.*field - mean) * (s.*field - mean);
  const double sd = std::sqrt(var / rows.size());
  return sd > 1e-12 ? sd : 1.0;
}

}  // namespace

bool FitDomain::contains(double mu, double vx, double delta, double dmz) const {
  const auto in = [](double v, double lo, double hi) {
    const double tol = 1e-9 * std::max(1.0, std::max(std::abs(lo), std::abs(hi)));
    return v >= lo - tol && v <= hi + tol;
  };
  return in(mu, mu_min, mu_max) && in(vx, vx_min, vx_max) && in(delta, delta_min, delta_max) &&
         in(dmz, dmz_min, dmz_max);
}

GridSpec GridSpec::default_grid() {
  const FitDomain d;
  GridSpec g;
  g.mu = linspace(d.mu_min, d.mu_max, 5);
  g.vx = linspace(d.vx_min, d.vx_max, 5);
  g.delta = linspace(d.delta_min, d.delta_max, 9);
  g.dmz = linspace(d.dmz_min, d.dmz_max, 9);
  return g;
}

SaddleDataset locate_saddles_grid(const GridSpec& grid, const equilibrium::Model& model,
                                  const FitDomain& domain, unsigned workers) {
  SaddleDataset out;
  out.domain = domain;
  const std::size_t n = grid.size();
  if (n == 0) throw ConfigError("locate_saddles_grid: empty grid");
  std::vector<std::vector<SaddleSample>> per_cell(n);
  parallel_for(
      n,
      [&](std::size_t idx) {
        std::size_t k = idx;
        const double dmz = grid.dmz[k % grid.dmz.size()];
        k /= grid.dmz.size();
        const double delta = grid.delta[k % grid.delta.size()];
        k /= grid.delta.size();
        const double vx = grid.vx[k % grid.vx.size()];
        k /= grid.vx.size();
        const double mu = grid.mu[k];
        if (!domain.contains(mu, vx, delta, dmz))
          throw DomainError("locate_saddles_grid: grid point outside the fit domain");
        const equilibrium::Conditions c{vx, mu, delta, dmz};
        for (const auto& eq : equilibrium::find_equilibria(c, model)) {
          if (eq.classification.stability != equilibrium::StabilityClass::kSaddle) continue;
          per_cell[idx].push_back({mu, vx, delta, dmz, eq.r > 0.0 ? 1 : 2, eq.beta, eq.r});
        }
        // At most one saddle per side: keep the one nearest the origin.
        auto& cell = per_cell[idx];
        std::vector<SaddleSample> kept;
        for (int branch : {1, 2}) {
          const SaddleSample* best = nullptr;
          for (const auto& s : cell)
            if (s.branch == branch && (!best || std::abs(s.r) < std::abs(best->r))) best = &s;
          if (best) kept.push_back(*best);
        }
        cell = std::move(kept);
      },
      workers);
  for (const auto& cell : per_cell) {
    ++out.cells;
    if (cell.empty()) ++out.cells_without_saddle;
    out.rows.insert(out.rows.end(), cell.begin(), cell.end());
  }
  const vehicle::AxleLoads fz = vehicle::static_loads(model.vehicle);
  for (double mu : grid.mu)
    out.saturation.push_back({mu, tire::saturation_angle(mu, fz.front, model.tire)});
  return out;
}

SaddlePrediction evaluate_parameters(const Parameters& p, double lf, double gravity, double mu,
                                     double vx, double delta, double dmz) {
  SaddlePrediction out;
  out.alpha_sat = p[0] * mu + p[1];
  out.f1 = p[2] * delta / mu;
  out.f2 = p[3] + p[4] * delta * mu + p[5] * vx;
  const double d3 = mu * p[6] * (1.0 - (p[7] * vx + p[8]));
  const double d4 = mu * p[9] * (1.0 - (p[10] * vx + p[11]));
  out.f3 = 1.0 - (dmz / d3) * (dmz / d3);
  out.f4 = 1.0 - (dmz / d4) * (dmz / d4);
  if (dmz == 0.0) out.f3 = out.f4 = 1.0;
  const double base = mu * gravity / vx;
  out.r_s1 = (base + out.f1) * out.f3;
  out.r_s2 = (-base + out.f1) * out.f3;
  const double a = std::abs(out.alpha_sat);
  out.beta_s1 = (-lf * out.r_s1 / vx + (-a + delta) * out.f2) * out.f4;
  out.beta_s2 = (-lf * out.r_s2 / vx + (a + delta) * out.f2) * out.f4;
  out.s1_exists = out.s2_exists = out.f3 > 0.0 && out.f4 > 0.0;
  return out;
}

SaddlePrediction eval_saddle_model(const SaddleFit& fit, double mu, double vx, double delta,
                                   double dmz) {
  if (!fit.domain.contains(mu, vx, delta, dmz))
    throw DomainError("eval_saddle_model: query outside the fit domain");
  return evaluate_parameters(fit.p, fit.lf, fit.gravity, mu, vx, delta, dmz);
}

Parameters canonical_parameters(const Parameters& p) {
  Parameters q = p;
  for (int base : {6, 9}) {
    double c0 = p[base] * (1.0 - p[base + 2]);
    double c1 = p[base] * p[base + 1];
    if (c0 < 0.0) {
      c0 = -c0;
      c1 = -c1;
    }
    q[base] = c0;
    q[base + 1] = c0 != 0.0 ? c1 / c0 : 0.0;
    q[base + 2] = 0.0;
  }
  return q;
}

SaddleFit fit_saddle_model(const SaddleDataset& data, const vehicle::VehicleParams& vehicle,
                           const FitOptions& options) {
  if (data.rows.size() < static_cast<std::size_t>(kFreeParams))
    throw ConfigError("fit_saddle_model: too few saddle rows");
  if (data.saturation.size() < 2)
    throw ConfigError("fit_saddle_model: need saturation samples at two or more mu values");
  if (options.seeds < 1 || options.max_iterations < 1)
    throw ConfigError("fit_saddle_model: seeds and iterations must be positive");

  // Affine saturation-angle law by ordinary least squares.
  Eigen::MatrixXd a(data.saturation.size(), 2);
  Eigen::VectorXd b(data.saturation.size());
  for (std::size_t i = 0; i < data.saturation.size(); ++i) {
    a(i, 0) = data.saturation[i].mu;
    a(i, 1) = 1.0;
    b(i) = data.saturation[i].alpha_sat;
  }
  const Eigen::Vector2d p12 = a.colPivHouseholderQr().solve(b);

  ResidualFunctor functor;
  functor.rows = &data.rows;
  functor.p1 = p12(0);
  functor.p2 = p12(1);
  functor.lf = vehicle.lf;
  functor.gravity = vehicle.gravity;
  functor.sigma_beta = stddev(data.rows, &SaddleSample::beta);
  functor.sigma_r = stddev(data.rows, &SaddleSample::r);

  std::mt19937_64 rng(options.seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const auto draw = [&](double lo, double hi) { return lo + (hi - lo) * unit(rng); };

  SaddleFit best;
  best.domain = data.domain;
  best.lf = vehicle.lf;
  best.gravity = vehicle.gravity;
  best.rows = static_cast<int>(data.rows.size());
  double best_cost = std::numeric_limits<double>::infinity();
  Eigen::VectorXd fvec(functor.values());

  for (int seed = 0; seed < options.seeds; ++seed) {
    Eigen::VectorXd theta(kFreeParams);
    theta << draw(-0.5, 0.5), draw(0.5, 1.5), draw(-0.5, 0.5), draw(-0.02, 0.02),
        draw(3000.0, 15000.0), draw(-200.0, 200.0), draw(3000.0, 15000.0), draw(-200.0, 200.0);
    Eigen::NumericalDiff<ResidualFunctor, Eigen::Central> numdiff(functor);
    Eigen::LevenbergMarquardt<Eigen::NumericalDiff<ResidualFunctor, Eigen::Central>> lm(numdiff);
    lm.parameters.maxfev = std::numeric_limits<int>::max() / 4;
    lm.parameters.ftol = 1e-14;
    lm.parameters.xtol = 1e-14;
    Eigen::LevenbergMarquardtSpace::Status status = lm.minimizeInit(theta);
    int iterations = 0;
    if (status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
      do {
        status = lm.minimizeOneStep(theta);
        ++iterations;
      } while (status == Eigen::LevenbergMarquardtSpace::Running &&
               iterations < options.max_iterations);
    }
    functor(theta, fvec);
    const double cost = fvec.squaredNorm();
    best.seed_costs.push_back(cost);
    if (cost < best_cost) {
      best_cost = cost;
      best.p = from_free(theta, p12(0), p12(1));
      best.cost = cost;
      best.converged = status != Eigen::LevenbergMarquardtSpace::Running &&
                       status != Eigen::LevenbergMarquardtSpace::TooManyFunctionEvaluation &&
                       status != Eigen::LevenbergMarquardtSpace::ImproperInputParameters;
    }
  }

  double sb = 0.0, sr = 0.0;
  for (const auto& s : data.rows) {
    const SaddlePrediction pr =
        evaluate_parameters(best.p, best.lf, best.gravity, s.mu, s.vx, s.delta, s.dmz);
    const double beta = s.branch == 1 ? pr.beta_s1 : pr.beta_s2;
    const double r = s.branch == 1 ? pr.r_s1 : pr.r_s2;
    sb += (beta - s.beta) * (beta - s.beta);
    sr += (r - s.r) * (r - s.r);
  }
  best.rms_beta = std::sqrt(sb / data.rows.size());
  best.rms_r = std::sqrt(sr / data.rows.size());
  return best;
}

}  // namespace drift::saddle
