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

// Naive GP posterior: explicit kernel loops and a full-pivot LU inverse.
//   mean = mu + k*^T (K + s^2 I)^-1 (y - mu)
//   var  = k** - k*^T (K + s^2 I)^-1 k*

#include <Eigen/Dense>

#include <cmath>
#include <numbers>
#include <string>

namespace qncal_test::dense {

struct Kernel {
  std::string family = "matern52";  // matern52 | rbf | periodic
  double length = 0.3;
  double period = 1.0;
  double scale = 1.0;
  double noise = 1e-6;
};

inline double k(const Kernel& c, const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  if (c.family == "periodic") {
    double s = 0.0;
    for (Eigen::Index d = 0; d < a.size(); ++d) {
      const double v = std::sin(std::numbers::pi * std::abs(a[d] - b[d]) / c.period);
      s += v * v;
    }
    return c.scale * std::exp(-2.0 * s / (c.length * c.length));
  }
  const double r = (a - b).norm();
  if (c.family == "rbf") return c.scale * std::exp(-r * r / (2.0 * c.length * c.length));
  const double u = std::sqrt(5.0) * r / c.length;
  return c.scale * (1.0 + u + u * u / 3.0) * std::exp(-u);
}

struct Posterior {
  Eigen::VectorXd mean, var;
};

/// Posterior at rows of Xs, with y standardized by its mean and sample
/// standard deviation (n-1) and the prior mean zero in standardized units.
inline Posterior predict(const Kernel& c, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, const Eigen::MatrixXd& Xs,
                         bool standardize = true) {
  const Eigen::Index n = X.rows(), m = Xs.rows();
  double offset = 0.0, sd = 1.0;
  if (standardize && n >= 2) {
    offset = y.mean();
    double ss = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) ss += (y[i] - offset) * (y[i] - offset);
    sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (!(sd > 0.0)) offset = 0.0, sd = 1.0;
  }
  Eigen::VectorXd ys = (y.array() - offset) / sd;
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(c, X.row(i).transpose(), X.row(j).transpose()) + (i == j ? c.noise : 0.0);
  const Eigen::MatrixXd Kinv = K.fullPivLu().inverse();
  Posterior p;
  p.mean.resize(m);
  p.var.resize(m);
  for (Eigen::Index s = 0; s < m; ++s) {
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks[i] = k(c, X.row(i).transpose(), Xs.row(s).transpose());
    const double kss = k(c, Xs.row(s).transpose(), Xs.row(s).transpose());
    p.mean[s] = offset + sd * ks.dot(Kinv * ys);
    p.var[s] = sd * sd * (kss - ks.dot(Kinv * ks));
  }
  return p;
}

/// Log marginal likelihood of raw y (no standardization), prior mean mu.
inline double log_marginal_likelihood(const Kernel& c, const Eigen::MatrixXd& X, const Eigen::VectorXd& y, double mu = 0.0) {
  const Eigen::Index n = X.rows();
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) K(i, j) = k(c, X.row(i).transpose(), X.row(j).transpose()) + (i == j ? c.noise : 0.0);
  const Eigen::VectorXd r = y.array() - mu;
  const auto lu = K.fullPivLu();
  return -0.5 * r.dot(lu.solve(r)) - 0.5 * std::log(lu.determinant()) - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

}  // namespace qncal_test::dense
