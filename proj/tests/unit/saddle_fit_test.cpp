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

#include <cmath>

#include <gtest/gtest.h>

#include "drift/saddle_fit.hpp"

namespace drift::saddle {
namespace {

const Parameters kTrue{0.133, 0.0004, 0.085, 0.889, 2.4e-6, -7.1e-4,
                       8560.0, -0.0071, 0.0, 6200.0, -0.012, 0.0};

SaddleDataset synthetic(const Parameters& p, const vehicle::VehicleParams& vp) {
  SaddleDataset d;
  const GridSpec g = GridSpec::default_grid();
  for (double mu : g.mu) {
    d.saturation.push_back({mu, p[0] * mu + p[1]});
    for (double vx : g.vx)
      for (double delta : g.delta)
        for (double dmz : g.dmz) {
          ++d.cells;
          const SaddlePrediction s = evaluate_parameters(p, vp.lf, vp.gravity, mu, vx, delta, dmz);
          if (!s.s1_exists) {
            ++d.cells_without_saddle;
            continue;
          }
          d.rows.push_back({mu, vx, delta, dmz, 1, s.beta_s1, s.r_s1});
          d.rows.push_back({mu, vx, delta, dmz, 2, s.beta_s2, s.r_s2});
        }
  }
  return d;
}

TEST(SaddleFit, DefaultGridSpansTheDomain) {
  const GridSpec g = GridSpec::default_grid();
  const FitDomain d;
  EXPECT_EQ(g.size(), 2025u);
  EXPECT_DOUBLE_EQ(g.mu.front(), d.mu_min);
  EXPECT_DOUBLE_EQ(g.mu.back(), d.mu_max);
  EXPECT_DOUBLE_EQ(g.vx.back(), d.vx_max);
  EXPECT_DOUBLE_EQ(g.dmz.front(), d.dmz_min);
}

TEST(SaddleFit, ZeroMomentSaddlesAreSymmetric) {
  const vehicle::VehicleParams vp;
  const SaddlePrediction s = evaluate_parameters(kTrue, vp.lf, vp.gravity, 0.8, 15.0, 0.0, 0.0);
  EXPECT_TRUE(s.s1_exists);
  EXPECT_NEAR(s.r_s1, -s.r_s2, 1e-12);
  EXPECT_NEAR(s.beta_s1, -s.beta_s2, 1e-12);
  EXPECT_NEAR(s.r_s1, 0.8 * vp.gravity / 15.0, 1e-12);
}

TEST(SaddleFit, CanonicalFormRemovesTheGauge) {
  Parameters a = kTrue;
  a[6] = kTrue[6] / (1.0 - 0.3);
  a[7] = kTrue[7] * (1.0 - 0.3);
  a[8] = 0.3;
  const vehicle::VehicleParams vp;
  for (double vx : {8.0, 15.0, 24.0}) {
    const SaddlePrediction x = evaluate_parameters(a, vp.lf, vp.gravity, 0.7, vx, 0.1, 2000.0);
    const SaddlePrediction y = evaluate_parameters(kTrue, vp.lf, vp.gravity, 0.7, vx, 0.1, 2000.0);
    EXPECT_NEAR(x.r_s1, y.r_s1, 1e-12);
    EXPECT_NEAR(x.beta_s1, y.beta_s1, 1e-12);
  }
  const Parameters c = canonical_parameters(a);
  EXPECT_NEAR(c[6], kTrue[6], 1e-9 * kTrue[6]);
  EXPECT_NEAR(c[7], kTrue[7], 1e-12);
  EXPECT_EQ(c[8], 0.0);
}

TEST(SaddleFit, RecoversSyntheticParameters) {
  const vehicle::VehicleParams vp;
  const SaddleDataset data = synthetic(kTrue, vp);
  const SaddleFit fit = fit_saddle_model(data, vp);
  EXPECT_TRUE(fit.converged);
  const Parameters got = canonical_parameters(fit.p);
  for (int i = 0; i < 12; ++i) {
    const double scale = std::abs(kTrue[i]);
    if (scale == 0.0)
      EXPECT_NEAR(got[i], 0.0, 1e-12) << "p" << i + 1;
    else
      EXPECT_LE(std::abs(got[i] - kTrue[i]) / scale, 1e-3) << "p" << i + 1;
  }
  EXPECT_LT(fit.rms_beta, 1e-6);
  EXPECT_LT(fit.rms_r, 1e-6);
}

TEST(SaddleFit, DomainChecks) {
  SaddleFit fit;
  fit.p = kTrue;
  EXPECT_THROW(eval_saddle_model(fit, 1.2, 15.0, 0.0, 0.0), DomainError);
  EXPECT_NO_THROW(eval_saddle_model(fit, 0.8, 15.0, 0.0, 0.0));
  SaddleDataset empty;
  EXPECT_THROW(fit_saddle_model(empty, vehicle::VehicleParams{}), ConfigError);
}

}  // namespace
}  // namespace drift::saddle
