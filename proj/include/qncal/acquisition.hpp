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

// Acquisition utilities for minimization. Every kind is expressed as a
// utility to be maximized; the lower confidence bound is negated.

#include "qncal/core.hpp"
#include "qncal/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>
#include <string_view>

namespace qncal {

enum class AcquisitionKind { pi, ei, lcb };
enum class CandidateSource { grid, sobol };

inline std::string_view to_string(AcquisitionKind k) {
  switch (k) {
    case AcquisitionKind::pi: return "pi";
    case AcquisitionKind::ei: return "ei";
    case AcquisitionKind::lcb: return "lcb";
  }
  return "?";
}

inline AcquisitionKind parse_acquisition_kind(std::string_view s) {
  if (s == "pi") return AcquisitionKind::pi;
  if (s == "ei") return AcquisitionKind::ei;
  if (s == "lcb") return AcquisitionKind::lcb;
  throw ArgumentError("unknown acquisition kind '" + std::string(s) + "'");
}

struct AcquisitionConfig {
  AcquisitionKind kind = AcquisitionKind::lcb;
  double beta = 2.0;
  CandidateSource candidate_source = CandidateSource::sobol;
  int candidate_count = 4096;
  // Skip candidates that coincide with an observed input (noiseless replay).
  bool exclude_visited = false;

  void validate() const {
    if (!(beta > 0.0) || !std::isfinite(beta)) throw ArgumentError("acquisition: beta must be > 0");
    if (candidate_count < 1) throw ArgumentError("acquisition: candidate_count must be >= 1");
  }
};

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }
inline double normal_pdf(double z) { return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi); }

/// Utility of a candidate with predictive mean `mean` and standard deviation
/// `stddev`, given the best (smallest) observation `best`.
inline double acquisition_value(AcquisitionKind kind, double mean, double stddev, double best, double beta = 2.0) {
  if (!(stddev >= 0.0)) throw ArgumentError("acquisition_value: stddev must be >= 0");
  const double improvement = best - mean;
  switch (kind) {
    case AcquisitionKind::pi:
      if (stddev == 0.0) return improvement > 0.0 ? 1.0 : (improvement == 0.0 ? 0.5 : 0.0);
      return normal_cdf(improvement / stddev);
    case AcquisitionKind::ei: {
      if (stddev == 0.0) return std::max(0.0, improvement);
      const double z = improvement / stddev;
      // Clamp tiny negative round-off.
      return std::max(0.0, improvement * normal_cdf(z) + stddev * normal_pdf(z));
    }
    case AcquisitionKind::lcb: return -(mean - beta * stddev);
  }
  return std::numeric_limits<double>::quiet_NaN();
}

/// Index of the candidate row with the largest utility; ties go to the lowest
/// index. Candidates are rows in the unit cube.
inline Eigen::Index propose_next_index(const GpPosterior& posterior, const AcquisitionConfig& config,
                                       const Matrix& candidates) {
  config.validate();
  if (candidates.rows() < 1) throw ArgumentError("propose_next: empty candidate set");
  if (candidates.cols() != posterior.dataset().dim()) throw ArgumentError("propose_next: dimension mismatch");

  const Prediction p = posterior.predict(candidates);
  const double best = posterior.best_observed();
  const Matrix& X = posterior.dataset().X;

  Eigen::Index arg = -1;
  double top = -std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < candidates.rows(); ++i) {
    if (config.exclude_visited) {
      bool seen = false;
      for (Eigen::Index j = 0; j < X.rows() && !seen; ++j) seen = (X.row(j) == candidates.row(i));
      if (seen) continue;
    }
    const double u = acquisition_value(config.kind, p.mean[i], std::sqrt(p.variance[i]), best, config.beta);
    if (std::isfinite(u) && (arg < 0 || u > top)) {
      arg = i;
      top = u;
    }
  }
  if (arg < 0) throw NumericError("propose_next: no candidate has a finite acquisition value");
  return arg;
}

inline Vector propose_next(const GpPosterior& posterior, const AcquisitionConfig& config, const Matrix& candidates) {
  return candidates.row(propose_next_index(posterior, config, candidates)).transpose();
}

}  // namespace qncal
