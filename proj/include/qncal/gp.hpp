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

// Exact Gaussian-process regression on the unit cube.
//
// Three stationary kernel families are provided (squared exponential,
// periodic and Matern nu=5/2), each scaled by an output amplitude and used
// with a homoscedastic Gaussian noise term. Observations are standardized to
// zero mean / unit sample deviation before fitting whenever there are at least
// two of them with non-zero spread; all kernel hyperparameters are therefore
// expressed in standardized units, and predictions are mapped back.
//
// The posterior caches a Cholesky factor of (K + sigma^2 I). When the plain
// factorization fails, a diagonal jitter of 1e-10, 1e-8 and finally 1e-6 is
// tried before giving up with a NumericError.

#include "qncal/core.hpp"
#include "qncal/detail/bfgs.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace qncal {

enum class KernelFamily { rbf, periodic, matern52 };

inline std::string_view to_string(KernelFamily f) {
  switch (f) {
    case KernelFamily::rbf: return "rbf";
    case KernelFamily::periodic: return "periodic";
    case KernelFamily::matern52: return "matern52";
  }
  return "?";
}

inline KernelFamily parse_kernel_family(std::string_view s) {
  if (s == "rbf") return KernelFamily::rbf;
  if (s == "periodic") return KernelFamily::periodic;
  if (s == "matern52" || s == "matern") return KernelFamily::matern52;
  throw ArgumentError("unknown kernel family '" + std::string(s) + "'");
}

struct KernelConfig {
  KernelFamily family = KernelFamily::matern52;
  double length_scale = 0.3;
  double period = 1.0;  // periodic family only
  double output_scale = 1.0;
  double noise_variance = 1e-6;

  void validate() const {
    if (!(length_scale > 0.0) || !std::isfinite(length_scale)) throw ArgumentError("kernel: length_scale must be > 0");
    if (!(period > 0.0) || !std::isfinite(period)) throw ArgumentError("kernel: period must be > 0");
    if (!(output_scale > 0.0) || !std::isfinite(output_scale)) throw ArgumentError("kernel: output_scale must be > 0");
    if (!(noise_variance >= 0.0) || !std::isfinite(noise_variance))
      throw ArgumentError("kernel: noise_variance must be >= 0");
  }
};

/// Observations on the unit cube: one row of X per point.
struct Dataset {
  Matrix X;
  Vector y;

  Eigen::Index size() const { return X.rows(); }
  Eigen::Index dim() const { return X.cols(); }

  void validate() const {
    if (X.rows() < 1) throw ArgumentError("dataset: need at least one observation");
    if (X.rows() != y.size()) throw ArgumentError("dataset: X rows and y length differ");
    if (!X.allFinite() || !y.allFinite()) throw ArgumentError("dataset: non-finite entries");
    constexpr double tol = 1e-12;
    if ((X.array() < -tol).any() || (X.array() > 1.0 + tol).any())
      throw ArgumentError("dataset: inputs must lie in the unit cube");
  }
};

// ---------------------------------------------------------------------------
// Kernels

namespace detail {

inline constexpr double sqrt5 = 2.236067977499789696409173668731276;

/// Unit-amplitude kernel of a single distance. For the periodic family this is
/// the one-dimensional form; multi-dimensional inputs go through PairGeometry.
inline double unit_kernel(const KernelConfig& c, double r) {
  switch (c.family) {
    case KernelFamily::rbf: return std::exp(-0.5 * r * r / (c.length_scale * c.length_scale));
    case KernelFamily::periodic: {
      const double s = std::sin(std::numbers::pi * r / c.period);
      return std::exp(-2.0 * s * s / (c.length_scale * c.length_scale));
    }
    case KernelFamily::matern52: {
      const double a = sqrt5 * r / c.length_scale;
      return (1.0 + a + a * a / 3.0) * std::exp(-a);
    }
  }
  return 0.0;
}

/// Pairwise Euclidean distances plus, for the periodic family, the
/// per-coordinate absolute differences. The periodic kernel is the product of
/// one-dimensional periodic kernels, exp(-2 sum_d sin^2(pi |dx_d| / p) / l^2),
/// which stays positive definite in any dimension.
struct PairGeometry {
  Matrix r;
  std::vector<Matrix> delta;
};

template <class A, class B>
PairGeometry pair_geometry(const Eigen::MatrixBase<A>& X1, const Eigen::MatrixBase<B>& X2, bool components) {
  if (X1.cols() != X2.cols()) throw ArgumentError("pairwise distance: dimension mismatch");
  PairGeometry g;
  g.r.resize(X1.rows(), X2.rows());
  for (Eigen::Index j = 0; j < X2.rows(); ++j)
    for (Eigen::Index i = 0; i < X1.rows(); ++i) g.r(i, j) = (X1.row(i) - X2.row(j)).norm();
  if (components) {
    for (Eigen::Index d = 0; d < X1.cols(); ++d) {
      Matrix m(X1.rows(), X2.rows());
      for (Eigen::Index j = 0; j < X2.rows(); ++j)
        for (Eigen::Index i = 0; i < X1.rows(); ++i) m(i, j) = std::abs(X1(i, d) - X2(j, d));
      g.delta.push_back(std::move(m));
    }
  }
  return g;
}

template <class A, class B>
Matrix pairwise_distances(const Eigen::MatrixBase<A>& X1, const Eigen::MatrixBase<B>& X2) {
  return pair_geometry(X1, X2, false).r;
}

/// sum_d sin^2(pi dx_d / p).
inline Matrix periodic_phase_sum(const KernelConfig& c, const PairGeometry& g) {
  Matrix S = Matrix::Zero(g.r.rows(), g.r.cols());
  for (const Matrix& m : g.delta)
    S += m.unaryExpr([&c](double v) {
      const double s = std::sin(std::numbers::pi * v / c.period);
      return s * s;
    });
  return S;
}

/// Unit-amplitude Gram matrix.
inline Matrix unit_kernel_matrix(const KernelConfig& c, const PairGeometry& g) {
  if (c.family == KernelFamily::periodic) {
    const double l2 = c.length_scale * c.length_scale;
    return periodic_phase_sum(c, g).unaryExpr([l2](double s) { return std::exp(-2.0 * s / l2); });
  }
  return g.r.unaryExpr([&c](double r) { return unit_kernel(c, r); });
}

/// Element-wise d/d(log length_scale) of the unit Gram matrix.
inline Matrix unit_kernel_dlog_length(const KernelConfig& c, const PairGeometry& g, const Matrix& Ku) {
  const double l2 = c.length_scale * c.length_scale;
  switch (c.family) {
    case KernelFamily::rbf: return Ku.cwiseProduct(g.r.cwiseAbs2()) / l2;
    case KernelFamily::periodic: return Ku.cwiseProduct(periodic_phase_sum(c, g)) * (4.0 / l2);
    case KernelFamily::matern52:
      return g.r.unaryExpr([&c](double r) {
        const double a = sqrt5 * r / c.length_scale;
        return a * a / 3.0 * (1.0 + a) * std::exp(-a);
      });
  }
  return Matrix();
}

/// Element-wise d/d(log period) of the unit periodic Gram matrix.
inline Matrix unit_kernel_dlog_period(const KernelConfig& c, const PairGeometry& g, const Matrix& Ku) {
  Matrix T = Matrix::Zero(g.r.rows(), g.r.cols());
  for (const Matrix& m : g.delta)
    T += m.unaryExpr([&c](double v) {
      const double u = std::numbers::pi * v / c.period;
      return u * std::sin(2.0 * u);
    });
  return Ku.cwiseProduct(T) * (2.0 / (c.length_scale * c.length_scale));
}

}  // namespace detail

/// output_scale * k(x, x') for the configured family.
template <class A, class B>
double kernel_eval(const KernelConfig& config, const Eigen::MatrixBase<A>& x, const Eigen::MatrixBase<B>& xp) {
  if (x.size() != xp.size()) throw ArgumentError("kernel_eval: dimension mismatch");
  config.validate();
  const auto d = (x.derived().reshaped() - xp.derived().reshaped()).eval();
  if (config.family == KernelFamily::periodic) {
    double s = 0.0;
    for (Eigen::Index i = 0; i < d.size(); ++i) {
      const double v = std::sin(std::numbers::pi * std::abs(d[i]) / config.period);
      s += v * v;
    }
    return config.output_scale * std::exp(-2.0 * s / (config.length_scale * config.length_scale));
  }
  return config.output_scale * detail::unit_kernel(config, d.norm());
}

/// Entry (i, j) = kernel_eval(config, X.row(i), X2.row(j)).
template <class A, class B>
Matrix gram_matrix(const KernelConfig& config, const Eigen::MatrixBase<A>& X, const Eigen::MatrixBase<B>& X2) {
  config.validate();
  const auto g = detail::pair_geometry(X, X2, config.family == KernelFamily::periodic);
  return config.output_scale * detail::unit_kernel_matrix(config, g);
}

// ---------------------------------------------------------------------------
// Factorization

namespace detail {

inline constexpr std::array<double, 4> jitter_ladder{0.0, 1e-10, 1e-8, 1e-6};

struct Factorization {
  Eigen::LLT<Matrix> llt;
  double jitter = 0.0;
};

/// Cholesky of A, escalating the diagonal jitter on failure.
inline std::optional<Factorization> try_factorize(const Matrix& A) {
  for (double jitter : jitter_ladder) {
    Factorization f;
    if (jitter == 0.0) {
      f.llt.compute(A);
    } else {
      Matrix Aj = A;
      Aj.diagonal().array() += jitter;
      f.llt.compute(Aj);
    }
    if (f.llt.info() == Eigen::Success && f.llt.matrixL().toDenseMatrix().diagonal().allFinite()) {
      f.jitter = jitter;
      return f;
    }
  }
  return std::nullopt;
}

inline double condition_estimate(const Matrix& A) {
  Eigen::SelfAdjointEigenSolver<Matrix> es(A, Eigen::EigenvaluesOnly);
  const auto& ev = es.eigenvalues();
  if (ev.size() == 0) return std::nan("");
  const double lo = std::abs(ev.minCoeff());
  return lo > 0.0 ? ev.cwiseAbs().maxCoeff() / lo : std::numeric_limits<double>::infinity();
}

inline Factorization factorize_or_throw(const Matrix& A) {
  if (!A.allFinite()) throw NumericError("covariance matrix has non-finite entries");
  if (auto f = try_factorize(A)) return std::move(*f);
  const double cond = condition_estimate(A);
  std::ostringstream os;
  os << "Cholesky factorization failed after jitter escalation to 1e-6 (condition estimate " << cond << ")";
  throw NumericError(os.str(), cond);
}

inline double log_det_from_llt(const Eigen::LLT<Matrix>& llt) {
  return 2.0 * llt.matrixLLT().diagonal().array().log().sum();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Posterior

enum class PriorMeanMode { zero, data_mean };
enum class Standardize { automatic, off };

/// Affine map applied to observations before fitting: y_std = (y - offset) / scale.
struct OutputTransform {
  double offset = 0.0;
  double scale = 1.0;

  static OutputTransform for_data(const Vector& y, Standardize mode) {
    OutputTransform t;
    if (mode == Standardize::off || y.size() < 2) return t;
    const double mean = y.mean();
    const double var = (y.array() - mean).square().sum() / static_cast<double>(y.size() - 1);
    const double sd = std::sqrt(var);
    if (!(sd > 0.0) || !std::isfinite(sd)) return t;
    t.offset = mean;
    t.scale = sd;
    return t;
  }
  Vector apply(const Vector& y) const { return ((y.array() - offset) / scale).matrix(); }
};

struct Prediction {
  Vector mean;
  Vector variance;
};

/// Fitted posterior. Immutable after construction.
class GpPosterior {
 public:
  GpPosterior(Dataset data, const KernelConfig& kernel, PriorMeanMode mode = PriorMeanMode::zero,
              Standardize standardize = Standardize::automatic)
      : data_(std::move(data)), kernel_(kernel) {
    data_.validate();
    kernel_.validate();
    transform_ = OutputTransform::for_data(data_.y, standardize);
    y_std_ = transform_.apply(data_.y);
    prior_mean_ = mode == PriorMeanMode::data_mean ? y_std_.mean() : 0.0;

    Matrix K = gram_matrix(kernel_, data_.X, data_.X);
    K.diagonal().array() += kernel_.noise_variance;
    auto f = detail::factorize_or_throw(K);
    chol_ = std::move(f.llt);
    jitter_ = f.jitter;
    alpha_ = chol_.solve(y_std_ - Vector::Constant(y_std_.size(), prior_mean_));
  }

  const Dataset& dataset() const { return data_; }
  const KernelConfig& kernel() const { return kernel_; }
  const OutputTransform& transform() const { return transform_; }
  /// Prior mean in standardized units.
  double prior_mean() const { return prior_mean_; }
  /// Prior mean mapped to observation units.
  double prior_mean_observed() const { return transform_.offset + transform_.scale * prior_mean_; }
  double jitter() const { return jitter_; }
  double best_observed() const { return data_.y.minCoeff(); }

  /// Posterior mean and latent-function variance at each row of Xs.
  template <class A>
  Prediction predict(const Eigen::MatrixBase<A>& Xs) const {
    if (Xs.cols() != data_.dim()) throw ArgumentError("predict: dimension mismatch");
    const Matrix Ks = gram_matrix(kernel_, data_.X, Xs);  // n x m
    Prediction p;
    p.mean = (Ks.transpose() * alpha_).array() + prior_mean_;
    const Matrix V = chol_.matrixL().solve(Ks);
    p.variance = (kernel_.output_scale - V.colwise().squaredNorm().array()).matrix().transpose();
    for (Eigen::Index i = 0; i < p.variance.size(); ++i) {
      if (p.variance[i] < 0.0) {
        if (p.variance[i] < -1e-9) warn("predict: clamped negative posterior variance " + std::to_string(p.variance[i]));
        p.variance[i] = 0.0;
      }
    }
    p.mean = (p.mean.array() * transform_.scale + transform_.offset).matrix();
    p.variance *= transform_.scale * transform_.scale;
    return p;
  }

  std::pair<double, double> predict_point(const Vector& x) const {
    const auto p = predict(x.transpose());
    return {p.mean[0], p.variance[0]};
  }

 private:
  Dataset data_;
  KernelConfig kernel_;
  OutputTransform transform_;
  Vector y_std_;
  double prior_mean_ = 0.0;
  Eigen::LLT<Matrix> chol_;
  Vector alpha_;
  double jitter_ = 0.0;
};

inline GpPosterior fit(Dataset data, const KernelConfig& config, PriorMeanMode mode = PriorMeanMode::zero,
                       Standardize standardize = Standardize::automatic) {
  return GpPosterior(std::move(data), config, mode, standardize);
}

// ---------------------------------------------------------------------------
// Marginal likelihood

/// Log marginal likelihood of y under GP(prior_mean, k + sigma^2 I), including
/// the -(n/2) ln 2 pi constant. Operates on y as given (no standardization).
inline double log_marginal_likelihood(const Dataset& data, const KernelConfig& config, double prior_mean = 0.0) {
  data.validate();
  config.validate();
  Matrix K = gram_matrix(config, data.X, data.X);
  K.diagonal().array() += config.noise_variance;
  const auto f = detail::factorize_or_throw(K);
  const Vector r = data.y.array() - prior_mean;
  const Vector alpha = f.llt.solve(r);
  const double n = static_cast<double>(data.size());
  return -0.5 * r.dot(alpha) - 0.5 * detail::log_det_from_llt(f.llt) - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

struct Interval {
  double lo;
  double hi;
};

struct HyperparameterBounds {
  Interval length_scale{0.05, 10.0};
  Interval output_scale{0.05, 20.0};
  Interval noise_variance{1e-8, 1.0};
  Interval period{0.1, 4.0};

  void validate() const {
    for (const Interval& i : {length_scale, output_scale, noise_variance, period})
      if (!(i.lo > 0.0) || !(i.lo <= i.hi) || !std::isfinite(i.hi))
        throw ArgumentError("hyperparameter bounds must satisfy 0 < lo <= hi < inf");
  }
};

namespace detail {

/// Log-space parameterization: [log l, log s, log sigma^2, (log p)].
struct HyperVector {
  static Eigen::Index size(KernelFamily f) { return f == KernelFamily::periodic ? 4 : 3; }

  static KernelConfig to_config(KernelFamily f, const Vector& z) {
    KernelConfig c;
    c.family = f;
    c.length_scale = std::exp(z[0]);
    c.output_scale = std::exp(z[1]);
    c.noise_variance = std::exp(z[2]);
    if (f == KernelFamily::periodic) c.period = std::exp(z[3]);
    return c;
  }

  static std::pair<Vector, Vector> bounds(KernelFamily f, const HyperparameterBounds& b) {
    const Eigen::Index n = size(f);
    Vector lo(n), hi(n);
    lo[0] = std::log(b.length_scale.lo), hi[0] = std::log(b.length_scale.hi);
    lo[1] = std::log(b.output_scale.lo), hi[1] = std::log(b.output_scale.hi);
    lo[2] = std::log(b.noise_variance.lo), hi[2] = std::log(b.noise_variance.hi);
    if (n == 4) lo[3] = std::log(b.period.lo), hi[3] = std::log(b.period.hi);
    return {lo, hi};
  }
};

/// Negative log marginal likelihood and its gradient in log-parameter space,
/// for a fixed distance matrix. Returns +inf when K cannot be factorized.
class NegLogLikelihood {
 public:
  NegLogLikelihood(KernelFamily family, PairGeometry geometry, Vector residual)
      : family_(family), g_(std::move(geometry)), r_(std::move(residual)) {}

  double operator()(const Vector& z, Vector* grad) const {
    const KernelConfig c = HyperVector::to_config(family_, z);
    const Eigen::Index n = g_.r.rows();
    const Matrix Ku = unit_kernel_matrix(c, g_);
    Matrix K = c.output_scale * Ku;
    K.diagonal().array() += c.noise_variance;
    auto f = try_factorize(K);
    if (!f) return std::numeric_limits<double>::infinity();
    const Vector alpha = f->llt.solve(r_);
    const double value = 0.5 * r_.dot(alpha) + 0.5 * log_det_from_llt(f->llt) +
                         0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);
    if (grad) {
      grad->resize(z.size());
      // d(-lml)/dtheta = -0.5 tr((alpha alpha^T - K^-1) dK/dtheta)
      const Matrix W = alpha * alpha.transpose() - f->llt.solve(Matrix::Identity(n, n));
      (*grad)[0] = -0.5 * c.output_scale * W.cwiseProduct(unit_kernel_dlog_length(c, g_, Ku)).sum();
      (*grad)[1] = -0.5 * c.output_scale * W.cwiseProduct(Ku).sum();
      (*grad)[2] = -0.5 * c.noise_variance * W.trace();
      if (family_ == KernelFamily::periodic)
        (*grad)[3] = -0.5 * c.output_scale * W.cwiseProduct(unit_kernel_dlog_period(c, g_, Ku)).sum();
    }
    return value;
  }

 private:
  KernelFamily family_;
  PairGeometry g_;
  Vector r_;
};

}  // namespace detail

/// Multistart maximum-likelihood fit of the kernel hyperparameters.
///
/// Works on the same standardized observations that `fit` uses, so the
/// returned config can be passed straight to `fit`. Start points are drawn
/// uniformly in the log-bounds box; each start is refined by a projected
/// quasi-Newton search and the best finite optimum across starts wins.
inline KernelConfig optimize_hyperparameters(const Dataset& data, KernelFamily family, const HyperparameterBounds& bounds,
                                             int restarts, Rng& rng, PriorMeanMode mode = PriorMeanMode::zero,
                                             Standardize standardize = Standardize::automatic) {
  data.validate();
  bounds.validate();
  if (restarts < 1) throw ArgumentError("optimize_hyperparameters: restarts must be >= 1");

  const OutputTransform t = OutputTransform::for_data(data.y, standardize);
  const Vector y = t.apply(data.y);
  const double mu = mode == PriorMeanMode::data_mean ? y.mean() : 0.0;
  const detail::NegLogLikelihood nll(family, detail::pair_geometry(data.X, data.X, family == KernelFamily::periodic),
                                     (y.array() - mu).matrix());
  const auto [lo, hi] = detail::HyperVector::bounds(family, bounds);

  detail::MinimizeResult best;
  for (int k = 0; k < restarts; ++k) {
    Vector z0(lo.size());
    for (Eigen::Index i = 0; i < z0.size(); ++i) z0[i] = lo[i] + (hi[i] - lo[i]) * uniform01(rng);
    auto r = detail::minimize_box_bfgs(nll, z0, lo, hi);
    if (std::isfinite(r.value) && r.value < best.value) best = std::move(r);
  }
  if (!std::isfinite(best.value)) throw NumericError("optimize_hyperparameters: no restart produced a finite likelihood");
  return detail::HyperVector::to_config(family, best.x);
}

}  // namespace qncal
