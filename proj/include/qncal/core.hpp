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

// Shared vocabulary: error types, the seeded generator, box domains and the
// warning sink used by the numeric code.

#include <Eigen/Dense>

#include <cmath>
#include <cstdint>
#include <functional>
#include <iostream>
#include <mutex>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>

namespace qncal {

using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Error hierarchy. The CLI maps each branch to an exit code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ArgumentError : public Error {
 public:
  using Error::Error;
};

/// Raised when a covariance factorization or an optimizer cannot produce a
/// finite answer. Carries a condition-number estimate when one is available.
class NumericError : public Error {
 public:
  explicit NumericError(const std::string& what, double condition_estimate = std::nan(""))
      : Error(what), condition_estimate_(condition_estimate) {}
  double condition_estimate() const { return condition_estimate_; }

 private:
  double condition_estimate_;
};

class ObjectiveError : public Error {
 public:
  using Error::Error;
};

class ProtocolError : public ObjectiveError {
 public:
  using ObjectiveError::ObjectiveError;
};

class InsufficientCountsError : public ObjectiveError {
 public:
  using ObjectiveError::ObjectiveError;
};

class DegenerateObjectiveError : public ObjectiveError {
 public:
  using ObjectiveError::ObjectiveError;
};

class UnsupportedInputError : public ArgumentError {
 public:
  using ArgumentError::ArgumentError;
};

// ---------------------------------------------------------------------------
// Warnings

using WarningSink = std::function<void(std::string_view)>;

namespace detail {
inline std::mutex& warning_mutex() {
  static std::mutex m;
  return m;
}
inline WarningSink& warning_sink() {
  static WarningSink sink = [](std::string_view msg) { std::clog << "qncal: warning: " << msg << '\n'; };
  return sink;
}
}  // namespace detail

/// Replaces the process-wide warning sink; returns the previous one.
inline WarningSink set_warning_sink(WarningSink sink) {
  std::lock_guard lock(detail::warning_mutex());
  return std::exchange(detail::warning_sink(), std::move(sink));
}

inline void warn(std::string_view msg) {
  std::lock_guard lock(detail::warning_mutex());
  if (detail::warning_sink()) detail::warning_sink()(msg);
}

// ---------------------------------------------------------------------------
// Seeds

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

/// Independent stream seed for item `index` under `master`.
constexpr std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  return mix64(mix64(master) ^ mix64(index + 0x632be59bd9b4e019ULL));
}

inline double uniform01(Rng& rng) { return std::uniform_real_distribution<double>(0.0, 1.0)(rng); }

// ---------------------------------------------------------------------------
// Box domains

/// Axis-aligned physical domain. The optimizer works in the unit cube and
/// maps through normalize/denormalize.
struct Box {
  Vector lower;
  Vector upper;

  Box() = default;
  Box(Vector lo, Vector hi) : lower(std::move(lo)), upper(std::move(hi)) { validate(); }

  Eigen::Index dim() const { return lower.size(); }

  void validate() const {
    if (lower.size() != upper.size() || lower.size() == 0)
      throw ArgumentError("box: lower/upper must be non-empty and of equal length");
    for (Eigen::Index i = 0; i < lower.size(); ++i) {
      if (!std::isfinite(lower[i]) || !std::isfinite(upper[i]))
        throw ArgumentError("box: bounds must be finite");
      if (!(lower[i] < upper[i])) throw ArgumentError("box: lower must be < upper in every dimension");
    }
  }

  Vector normalize(const Vector& x) const {
    return ((x - lower).array() / (upper - lower).array()).matrix();
  }
  Vector denormalize(const Vector& u) const {
    return (lower.array() + u.array() * (upper - lower).array()).matrix();
  }
  Matrix normalize_rows(const Matrix& X) const {
    Matrix U(X.rows(), X.cols());
    for (Eigen::Index i = 0; i < X.rows(); ++i) U.row(i) = normalize(X.row(i).transpose()).transpose();
    return U;
  }
  Matrix denormalize_rows(const Matrix& U) const {
    Matrix X(U.rows(), U.cols());
    for (Eigen::Index i = 0; i < U.rows(); ++i) X.row(i) = denormalize(U.row(i).transpose()).transpose();
    return X;
  }
  bool contains(const Vector& x, double tol = 0.0) const {
    return (x.array() >= lower.array() - tol).all() && (x.array() <= upper.array() + tol).all();
  }
};

inline Box unit_box(Eigen::Index dim) { return Box(Vector::Zero(dim), Vector::Ones(dim)); }

}  // namespace qncal
