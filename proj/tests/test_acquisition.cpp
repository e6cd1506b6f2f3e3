// Copyright 2026 The qncal Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "qncal/acquisition.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

namespace qncal {
namespace {

struct MonteCarlo {
  double pi, pi_se, ei, ei_se, lcb, lcb_se;
};

// Sample statistics of the improvement under f ~ N(mean, sd^2).
MonteCarlo monte_carlo(double mean, double sd, double best, double beta, int draws, std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> z;
  double s_pi = 0.0, s_ei = 0.0, s_ei2 = 0.0, s_f = 0.0, s_f2 = 0.0;
  for (int i = 0; i < draws; ++i) {
    const double f = mean + sd * z(rng);
    const double imp = std::max(0.0, best - f);
    s_pi += f < best ? 1.0 : 0.0;
    s_ei += imp;
    s_ei2 += imp * imp;
    s_f += f;
    s_f2 += f * f;
  }
  const double n = draws;
  MonteCarlo m;
  m.pi = s_pi / n;
  m.pi_se = std::sqrt(std::max(m.pi * (1.0 - m.pi), 1e-12) / n);
  m.ei = s_ei / n;
  m.ei_se = std::sqrt(std::max(s_ei2 / n - m.ei * m.ei, 1e-24) / n);
  const double fm = s_f / n, fsd = std::sqrt(s_f2 / n - fm * fm);
  m.lcb = -(fm - beta * fsd);
  m.lcb_se = sd * std::sqrt(1.0 / n + beta * beta / (2.0 * n));
  return m;
}

TEST(ClosedForms, MatchMonteCarloWithinThreeStandardErrors) {
  const struct {
    double mean, sd, best;
  } cases[] = {{0.0, 1.0, 0.0}, {1.0, 0.5, 0.2}, {-0.3, 2.0, 0.5}, {24.0, 0.3, 23.9}, {5.0, 1e-2, 5.02}};
  std::uint64_t seed = 1;
  for (const auto& c : cases) {
    const MonteCarlo mc = monte_carlo(c.mean, c.sd, c.best, 2.0, 1000000, seed++);
    EXPECT_NEAR(acquisition_value(AcquisitionKind::pi, c.mean, c.sd, c.best), mc.pi, 3.0 * mc.pi_se);
    EXPECT_NEAR(acquisition_value(AcquisitionKind::ei, c.mean, c.sd, c.best), mc.ei, 3.0 * mc.ei_se);
    EXPECT_NEAR(acquisition_value(AcquisitionKind::lcb, c.mean, c.sd, c.best, 2.0), mc.lcb, 3.0 * mc.lcb_se);
  }
}

TEST(ClosedForms, KnownValues) {
  EXPECT_DOUBLE_EQ(acquisition_value(AcquisitionKind::pi, 0.0, 1.0, 0.0), 0.5);
  EXPECT_NEAR(acquisition_value(AcquisitionKind::ei, 0.0, 1.0, 0.0), 1.0 / std::sqrt(2.0 * std::numbers::pi), 1e-15);
  EXPECT_DOUBLE_EQ(acquisition_value(AcquisitionKind::lcb, 3.0, 0.5, 0.0, 2.0), -2.0);
}

TEST(ClosedForms, ZeroStddevLimits) {
  EXPECT_EQ(acquisition_value(AcquisitionKind::pi, 1.0, 0.0, 2.0), 1.0);
  EXPECT_EQ(acquisition_value(AcquisitionKind::pi, 3.0, 0.0, 2.0), 0.0);
  EXPECT_EQ(acquisition_value(AcquisitionKind::ei, 1.0, 0.0, 2.0), 1.0);
  EXPECT_EQ(acquisition_value(AcquisitionKind::ei, 3.0, 0.0, 2.0), 0.0);
  EXPECT_THROW(acquisition_value(AcquisitionKind::ei, 0.0, -1.0, 0.0), ArgumentError);
}

TEST(ClosedForms, EiIsNonNegativeAndMonotone) {
  double prev = -1.0;
  for (double m = 3.0; m >= -3.0; m -= 0.25) {
    const double v = acquisition_value(AcquisitionKind::ei, m, 0.7, 0.0);
    EXPECT_GE(v, 0.0);
    EXPECT_GT(v, prev);
    prev = v;
  }
}

TEST(Parse, RoundTrip) {
  for (AcquisitionKind k : {AcquisitionKind::pi, AcquisitionKind::ei, AcquisitionKind::lcb})
    EXPECT_EQ(parse_acquisition_kind(to_string(k)), k);
  EXPECT_THROW(parse_acquisition_kind("ucb"), ArgumentError);
}

GpPosterior simple_posterior() {
  Matrix X(3, 1);
  X << 0.1, 0.5, 0.9;
  Vector y(3);
  y << 1.0, 0.0, 1.0;
  KernelConfig c;
  c.length_scale = 0.2;
  return fit({X, y}, c);
}

TEST(Propose, PicksArgmaxOfUtility) {
  const GpPosterior post = simple_posterior();
  Matrix cand(101, 1);
  for (int i = 0; i <= 100; ++i) cand(i, 0) = i / 100.0;
  for (AcquisitionKind k : {AcquisitionKind::pi, AcquisitionKind::ei, AcquisitionKind::lcb}) {
    AcquisitionConfig cfg;
    cfg.kind = k;
    const Eigen::Index idx = propose_next_index(post, cfg, cand);
    const Prediction p = post.predict(cand);
    const double chosen = acquisition_value(k, p.mean[idx], std::sqrt(p.variance[idx]), post.best_observed(), 2.0);
    for (int i = 0; i <= 100; ++i)
      EXPECT_LE(acquisition_value(k, p.mean[i], std::sqrt(p.variance[i]), post.best_observed(), 2.0), chosen);
  }
}

TEST(Propose, TiesGoToLowestIndex) {
  const GpPosterior post = simple_posterior();
  Matrix cand(3, 1);
  cand << 0.3, 0.3, 0.3;
  EXPECT_EQ(propose_next_index(post, AcquisitionConfig{}, cand), 0);
}

TEST(Propose, ExcludeVisitedSkipsObservedInputs) {
  const GpPosterior post = simple_posterior();
  Matrix cand(2, 1);
  cand << 0.5, 0.95;
  AcquisitionConfig cfg;
  cfg.kind = AcquisitionKind::pi;
  cfg.exclude_visited = true;
  EXPECT_EQ(propose_next_index(post, cfg, cand), 1);
  Matrix only(1, 1);
  only << 0.5;
  EXPECT_THROW(propose_next_index(post, cfg, only), NumericError);
}

TEST(Propose, RejectsBadCandidates) {
  const GpPosterior post = simple_posterior();
  EXPECT_THROW(propose_next(post, AcquisitionConfig{}, Matrix(0, 1)), ArgumentError);
  EXPECT_THROW(propose_next(post, AcquisitionConfig{}, Matrix::Zero(2, 2)), ArgumentError);
  AcquisitionConfig bad;
  bad.beta = 0.0;
  EXPECT_THROW(propose_next(post, bad, Matrix::Zero(2, 1)), ArgumentError);
}

}  // namespace
}  // namespace qncal
