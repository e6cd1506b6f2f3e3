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

// Box-constrained quasi-Newton minimizer (projected BFGS with an active set).
// Small and dense: intended for a handful of hyperparameters.

#include "qncal/core.hpp"

#include <cmath>
#include <limits>

namespace qncal::detail {

struct MinimizeOptions {
  int max_iterations = 100;
  double gradient_tolerance = 1e-6;
  double value_tolerance = 1e-10;
  double max_step = 2.0;  // per-coordinate cap on the trial step
};

struct MinimizeResult {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
  int iterations = 0;
  int evaluations = 0;
  bool converged = false;
};

/// Minimizes f over lo <= x <= hi. `f(x, grad)` returns the value and writes
/// the gradient into *grad. Non-finite values are treated as infeasible and
/// rejected by the line search. The returned value never exceeds f(clamp(x0)).
template <class F>
MinimizeResult minimize_box_bfgs(F&& f, const Vector& x0, const Vector& lo, const Vector& hi,
                                 const MinimizeOptions& opt = {}) {
  const Eigen::Index n = x0.size();
  MinimizeResult res;
  res.x = x0.cwiseMax(lo).cwiseMin(hi);
  Vector g(n);
  res.value = f(res.x, &g);
  res.evaluations = 1;
  if (!std::isfinite(res.value) || !g.allFinite()) return res;

  Matrix H = Matrix::Identity(n, n);
  auto free_mask = [&](const Vector& x, const Vector& grad) {
    Eigen::Array<bool, Eigen::Dynamic, 1> m(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const bool at_lo = x[i] <= lo[i] && grad[i] > 0.0;
      const bool at_hi = x[i] >= hi[i] && grad[i] < 0.0;
      m[i] = !(at_lo || at_hi);
    }
    return m;
  };

  for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
    const auto mask = free_mask(res.x, g);
    Vector gf = g;
    for (Eigen::Index i = 0; i < n; ++i)
      if (!mask[i]) gf[i] = 0.0;
    if (gf.lpNorm<Eigen::Infinity>() < opt.gradient_tolerance) {
      res.converged = true;
      break;
    }

    Vector d = -(H * gf);
    for (Eigen::Index i = 0; i < n; ++i)
      if (!mask[i]) d[i] = 0.0;
    if (d.dot(gf) >= 0.0) {
      H.setIdentity();
      d = -gf;
    }
    const double dmax = d.lpNorm<Eigen::Infinity>();
    if (dmax > opt.max_step) d *= opt.max_step / dmax;

    // Armijo backtracking along the projected path.
    double t = 1.0;
    Vector x_new, g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < 40; ++ls) {
      x_new = (res.x + t * d).cwiseMax(lo).cwiseMin(hi);
      f_new = f(x_new, &g_new);
      ++res.evaluations;
      if (std::isfinite(f_new) && g_new.allFinite() && f_new <= res.value + 1e-4 * g.dot(x_new - res.x)) {
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) break;

    const Vector s = x_new - res.x;
    const Vector yv = g_new - g;
    const double f_old = res.value;
    res.x = x_new;
    res.value = f_new;
    g = g_new;

    const double sy = s.dot(yv);
    if (sy > 1e-12) {
      const double rho = 1.0 / sy;
      const Matrix I = Matrix::Identity(n, n);
      H = (I - rho * s * yv.transpose()) * H * (I - rho * yv * s.transpose()) + rho * s * s.transpose();
    } else {
      H.setIdentity();
    }
    if (std::abs(f_old - f_new) <= opt.value_tolerance * (1.0 + std::abs(f_new))) {
      res.converged = true;
      break;
    }
  }
  return res;
}

}  // namespace qncal::detail
