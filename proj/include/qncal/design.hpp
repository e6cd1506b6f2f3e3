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

#pragma once

// Initial designs on the unit cube: i.i.d. uniform, Latin hypercube,
// maximin Latin hypercube (best of K random LHS draws), and the unscrambled
// Sobol and Halton sequences (dimension <= 10, leading zero point skipped).

#include "qncal/core.hpp"

#include <algorithm>
#include <array>
#include <cstdint>
#include <limits>
#include <numeric>
#include <string>
#include <string_view>
#include <vector>

namespace qncal {

enum class DesignScheme { random, lhs, maximin_lhs, sobol, halton };

inline std::string_view to_string(DesignScheme s) {
  switch (s) {
    case DesignScheme::random: return "random";
    case DesignScheme::lhs: return "lhs";
    case DesignScheme::maximin_lhs: return "maximin";
    case DesignScheme::sobol: return "sobol";
    case DesignScheme::halton: return "halton";
  }
  return "?";
}

inline DesignScheme parse_design_scheme(std::string_view s) {
  if (s == "random") return DesignScheme::random;
  if (s == "lhs") return DesignScheme::lhs;
  if (s == "maximin" || s == "maximin_lhs") return DesignScheme::maximin_lhs;
  if (s == "sobol") return DesignScheme::sobol;
  if (s == "halton") return DesignScheme::halton;
  throw ArgumentError("unknown design scheme '" + std::string(s) + "'");
}

struct DesignSpec {
  DesignScheme scheme = DesignScheme::lhs;
  int n_points = 12;
  int dim = 2;
  int maximin_candidates = 1000;

  void validate() const {
    if (n_points < 1) throw ArgumentError("design: n_points must be >= 1");
    if (dim < 1) throw ArgumentError("design: dim must be >= 1");
    if (maximin_candidates < 1) throw ArgumentError("design: maximin_candidates must be >= 1");
    if ((scheme == DesignScheme::sobol || scheme == DesignScheme::halton) && dim > 10)
      throw ArgumentError("design: low-discrepancy sequences support dim <= 10");
  }
};

inline constexpr int max_sequence_dim = 10;

namespace detail {

// Joe & Kuo primitive polynomials and initial direction numbers, dims 2..10.
struct SobolPoly {
  int degree;
  unsigned coeffs;
  std::array<std::uint32_t, 5> m;
};
inline constexpr std::array<SobolPoly, 9> sobol_polys{{
    {1, 0, {1}},
    {2, 1, {1, 3}},
    {3, 1, {1, 3, 1}},
    {3, 2, {1, 1, 1}},
    {4, 1, {1, 1, 3, 3}},
    {4, 4, {1, 3, 5, 13}},
    {5, 2, {1, 1, 5, 5, 17}},
    {5, 4, {1, 1, 5, 5, 5}},
    {5, 7, {1, 1, 7, 11, 19}},
}};

inline std::array<std::uint32_t, 33> sobol_directions(int d) {
  std::array<std::uint32_t, 33> v{};
  if (d == 0) {
    for (int k = 1; k <= 32; ++k) v[k] = std::uint32_t{1} << (32 - k);
    return v;
  }
  const SobolPoly& p = sobol_polys[d - 1];
  const int s = p.degree;
  for (int k = 1; k <= std::min(s, 32); ++k) v[k] = p.m[k - 1] << (32 - k);
  for (int k = s + 1; k <= 32; ++k) {
    v[k] = v[k - s] ^ (v[k - s] >> s);
    for (int i = 1; i < s; ++i)
      if ((p.coeffs >> (s - 1 - i)) & 1u) v[k] ^= v[k - i];
  }
  return v;
}

inline constexpr std::array<int, 10> first_primes{2, 3, 5, 7, 11, 13, 17, 19, 23, 29};

inline double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

inline Matrix latin_hypercube(int n, int dim, Rng& rng) {
  Matrix X(n, dim);
  std::vector<int> perm(n);
  for (int j = 0; j < dim; ++j) {
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    for (int i = 0; i < n; ++i) X(i, j) = (perm[i] + uniform01(rng)) / n;
  }
  return X;
}

inline double min_pairwise_distance(const Matrix& X) {
  double best = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < X.rows(); ++i)
    for (Eigen::Index j = i + 1; j < X.rows(); ++j) best = std::min(best, (X.row(i) - X.row(j)).norm());
  return best;
}

}  // namespace detail

/// First n points of the Sobol sequence in `dim` dimensions, optionally
/// skipping the all-zeros point.
inline Matrix sobol_points(int n, int dim, bool skip_zero = true) {
  if (dim < 1 || dim > max_sequence_dim) throw ArgumentError("sobol: dim must be in [1, 10]");
  std::vector<std::array<std::uint32_t, 33>> dirs;
  for (int d = 0; d < dim; ++d) dirs.push_back(detail::sobol_directions(d));
  Matrix X(n, dim);
  std::vector<std::uint32_t> state(dim, 0);
  std::uint64_t index = 0;
  auto advance = [&] {
    // Gray-code step: flip the direction number of the lowest zero bit.
    int c = 1;
    for (std::uint64_t v = index; v & 1u; v >>= 1) ++c;
    for (int d = 0; d < dim; ++d) state[d] ^= dirs[d][c];
    ++index;
  };
  if (skip_zero) advance();
  for (int i = 0; i < n; ++i) {
    for (int d = 0; d < dim; ++d) X(i, d) = static_cast<double>(state[d]) / 4294967296.0;
    advance();
  }
  return X;
}

/// First n Halton points (indices 1..n) with prime bases 2, 3, 5, ...
inline Matrix halton_points(int n, int dim) {
  if (dim < 1 || dim > max_sequence_dim) throw ArgumentError("halton: dim must be in [1, 10]");
  Matrix X(n, dim);
  for (int i = 0; i < n; ++i)
    for (int d = 0; d < dim; ++d) X(i, d) = detail::radical_inverse(static_cast<std::uint64_t>(i) + 1, detail::first_primes[d]);
  return X;
}

/// n_points x dim design in [0,1]^dim. Deterministic given the generator
/// state; Sobol and Halton ignore it.
inline Matrix generate_design(const DesignSpec& spec, Rng& rng) {
  spec.validate();
  switch (spec.scheme) {
    case DesignScheme::random: {
      Matrix X(spec.n_points, spec.dim);
      for (int i = 0; i < spec.n_points; ++i)
        for (int j = 0; j < spec.dim; ++j) X(i, j) = uniform01(rng);
      return X;
    }
    case DesignScheme::lhs: return detail::latin_hypercube(spec.n_points, spec.dim, rng);
    case DesignScheme::maximin_lhs: {
      Matrix best = detail::latin_hypercube(spec.n_points, spec.dim, rng);
      double best_d = detail::min_pairwise_distance(best);
      for (int k = 1; k < spec.maximin_candidates; ++k) {
        Matrix cand = detail::latin_hypercube(spec.n_points, spec.dim, rng);
        const double d = detail::min_pairwise_distance(cand);
        if (d > best_d) {
          best = std::move(cand);
          best_d = d;
        }
      }
      return best;
    }
    case DesignScheme::sobol: return sobol_points(spec.n_points, spec.dim);
    case DesignScheme::halton: return halton_points(spec.n_points, spec.dim);
  }
  throw ArgumentError("design: unknown scheme");
}

inline Matrix generate_design(const DesignSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  return generate_design(spec, rng);
}

}  // namespace qncal
