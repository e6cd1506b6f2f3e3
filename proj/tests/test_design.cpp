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

#include "qncal/design.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <vector>

namespace qncal {
namespace {

// Unscrambled reference rows (generator indices 1..8, 5 dimensions); index 0
// is the origin and is skipped by sobol_points.
const double kSobol5[8][5] = {
    {0.5, 0.5, 0.5, 0.5, 0.5},           {0.75, 0.25, 0.25, 0.25, 0.75},   {0.25, 0.75, 0.75, 0.75, 0.25},
    {0.375, 0.375, 0.625, 0.875, 0.375}, {0.875, 0.875, 0.125, 0.375, 0.875}, {0.625, 0.125, 0.875, 0.625, 0.625},
    {0.125, 0.625, 0.375, 0.125, 0.125}, {0.1875, 0.3125, 0.9375, 0.4375, 0.5625}};

TEST(Sobol, MatchesReferenceRows) {
  const Matrix X = sobol_points(8, 5);
  for (int i = 0; i < 8; ++i)
    for (int d = 0; d < 5; ++d) EXPECT_EQ(X(i, d), kSobol5[i][d]) << "row " << i << " dim " << d;
}

TEST(Sobol, MatchesReferenceRowsInTenDimensions) {
  const Matrix X = sobol_points(127, 10);
  const struct {
    int index;
    double row[10];
  } ref[] = {
      {37, {0.921875, 0.640625, 0.578125, 0.921875, 0.765625, 0.296875, 0.171875, 0.796875, 0.609375, 0.171875}},
      {100, {0.4140625, 0.2578125, 0.7734375, 0.7265625, 0.8828125, 0.7421875, 0.0234375, 0.4765625, 0.6328125, 0.6953125}},
      {127, {0.0078125, 0.6640625, 0.5546875, 0.6328125, 0.4765625, 0.3359375, 0.2421875, 0.0703125, 0.4140625, 0.5390625}},
  };
  for (const auto& r : ref)
    for (int d = 0; d < 10; ++d) EXPECT_EQ(X(r.index - 1, d), r.row[d]) << "index " << r.index << " dim " << d;
}

TEST(Halton, MatchesReferenceRows) {
  const double ref[5][3] = {{0.5, 1.0 / 3.0, 0.2},
                            {0.25, 2.0 / 3.0, 0.4},
                            {0.75, 1.0 / 9.0, 0.6},
                            {0.125, 4.0 / 9.0, 0.8},
                            {0.625, 7.0 / 9.0, 0.04}};
  const Matrix X = halton_points(5, 3);
  for (int i = 0; i < 5; ++i)
    for (int d = 0; d < 3; ++d) EXPECT_NEAR(X(i, d), ref[i][d], 1e-15);
}

bool one_per_stratum(const Matrix& X) {
  const Eigen::Index n = X.rows();
  for (Eigen::Index d = 0; d < X.cols(); ++d) {
    std::vector<int> hits(n, 0);
    for (Eigen::Index i = 0; i < n; ++i) {
      const int s = std::min<int>(static_cast<int>(X(i, d) * n), static_cast<int>(n) - 1);
      ++hits[s];
    }
    if (std::any_of(hits.begin(), hits.end(), [](int h) { return h != 1; })) return false;
  }
  return true;
}

TEST(LatinHypercube, OnePointPerStratum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    DesignSpec s;
    s.n_points = 12 + static_cast<int>(seed % 4);
    s.dim = 1 + static_cast<int>(seed % 3);
    EXPECT_TRUE(one_per_stratum(generate_design(s, seed)));
    s.scheme = DesignScheme::maximin_lhs;
    s.maximin_candidates = 50;
    EXPECT_TRUE(one_per_stratum(generate_design(s, seed)));
  }
}

TEST(LatinHypercube, MaximinNotWorseThanPlainFromSameSeed) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    DesignSpec s;
    s.n_points = 15;
    s.dim = 3;
    const Matrix plain = generate_design(s, seed);
    s.scheme = DesignScheme::maximin_lhs;
    const Matrix mm = generate_design(s, seed);
    EXPECT_GE(detail::min_pairwise_distance(mm), detail::min_pairwise_distance(plain));
  }
}

TEST(Designs, InUnitCubeAndDeterministic) {
  for (DesignScheme sc : {DesignScheme::random, DesignScheme::lhs, DesignScheme::maximin_lhs, DesignScheme::sobol,
                          DesignScheme::halton}) {
    DesignSpec s;
    s.scheme = sc;
    s.n_points = 16;
    s.dim = 3;
    s.maximin_candidates = 20;
    const Matrix a = generate_design(s, 42), b = generate_design(s, 42);
    EXPECT_EQ(a, b) << to_string(sc);
    EXPECT_EQ(a.rows(), 16);
    EXPECT_GE(a.minCoeff(), 0.0);
    EXPECT_LT(a.maxCoeff(), 1.0);
    EXPECT_EQ(parse_design_scheme(to_string(sc)), sc);
  }
}

TEST(Designs, RejectsInvalidSpecs) {
  DesignSpec s;
  s.n_points = 0;
  EXPECT_THROW(generate_design(s, 1), ArgumentError);
  s.n_points = 4;
  s.scheme = DesignScheme::sobol;
  s.dim = 11;
  EXPECT_THROW(generate_design(s, 1), ArgumentError);
  EXPECT_THROW(parse_design_scheme("grid"), ArgumentError);
}

}  // namespace
}  // namespace qncal
