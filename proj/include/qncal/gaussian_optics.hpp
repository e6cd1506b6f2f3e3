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

// Gaussian-state model of a two-photon (Hong-Ou-Mandel) interference setup
// read out by two threshold detectors.
//
// Conventions: quadratures are ordered (x1, p1, ..., xn, pn) and the vacuum
// covariance is the identity. A linear optical element acts on the quadrature
// vector as r' = M r, so gamma' = M gamma M^T and d' = M d.
//
// The interferometer always uses eight modes:
//
//   0  upper arm            1  lower arm
//   2  upper loss port      3  lower loss port
//   4  upper distinguishable part   5  lower distinguishable part
//   6  vacuum mixed with 4  7  vacuum mixed with 5
//
// Detector D1 collects modes {0, 4, 5} and D2 collects {1, 6, 7} after the
// final splitters. Elements that a scenario does not use are transmittance 1.

#include "qncal/core.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <initializer_list>
#include <numbers>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace qncal {

struct GaussianState {
  int n_modes = 0;
  Vector displacement;  // length 2n
  Matrix covariance;    // 2n x 2n

  static GaussianState vacuum(int n) {
    if (n < 1) throw ArgumentError("vacuum: need at least one mode");
    return {n, Vector::Zero(2 * n), Matrix::Identity(2 * n, 2 * n)};
  }
};

/// Symplectic form Omega = diag([[0, 1], [-1, 0]], ...).
inline Matrix symplectic_form(int n) {
  Matrix W = Matrix::Zero(2 * n, 2 * n);
  for (int k = 0; k < n; ++k) {
    W(2 * k, 2 * k + 1) = 1.0;
    W(2 * k + 1, 2 * k) = -1.0;
  }
  return W;
}

/// Smallest eigenvalue of gamma + i Omega (>= 0 for a physical state).
inline double uncertainty_margin(const GaussianState& s) {
  const Eigen::MatrixXcd H = s.covariance.cast<std::complex<double>>() +
                             std::complex<double>(0.0, 1.0) * symplectic_form(s.n_modes).cast<std::complex<double>>();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd> es(H, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

// ---------------------------------------------------------------------------
// States

inline GaussianState make_vacuum(int n) { return GaussianState::vacuum(n); }

/// Single-mode squeezed vacuum, x quadrature squeezed.
inline GaussianState make_squeezed(double r) {
  if (!(r >= 0.0)) throw ArgumentError("squeezed: r must be >= 0");
  GaussianState s = GaussianState::vacuum(1);
  s.covariance(0, 0) = std::exp(-2.0 * r);
  s.covariance(1, 1) = std::exp(2.0 * r);
  return s;
}

/// Two-mode squeezed vacuum: cosh 2r on the diagonal, +sinh 2r between the x
/// quadratures and -sinh 2r between the p quadratures.
inline GaussianState make_tmsv(double r) {
  if (!(r >= 0.0)) throw ArgumentError("tmsv: r must be >= 0");
  GaussianState s = GaussianState::vacuum(2);
  const double c = std::cosh(2.0 * r), sh = std::sinh(2.0 * r);
  s.covariance.diagonal().setConstant(c);
  s.covariance(0, 2) = s.covariance(2, 0) = sh;
  s.covariance(1, 3) = s.covariance(3, 1) = -sh;
  return s;
}

inline GaussianState make_thermal(double mean_photons) {
  if (!(mean_photons >= 0.0)) throw ArgumentError("thermal: mean photon number must be >= 0");
  GaussianState s = GaussianState::vacuum(1);
  s.covariance *= 1.0 + 2.0 * mean_photons;
  return s;
}

/// Copies `part` into `total` starting at mode `first_mode` (the modes are
/// assumed uncorrelated with the rest beforehand).
inline void embed(GaussianState& total, const GaussianState& part, int first_mode) {
  if (first_mode < 0 || first_mode + part.n_modes > total.n_modes) throw ArgumentError("embed: mode range out of bounds");
  const int o = 2 * first_mode, m = 2 * part.n_modes;
  total.covariance.block(o, 0, m, total.covariance.cols()).setZero();
  total.covariance.block(0, o, total.covariance.rows(), m).setZero();
  total.covariance.block(o, o, m, m) = part.covariance;
  total.displacement.segment(o, m) = part.displacement;
}

// ---------------------------------------------------------------------------
// Passive elements (in place, touching only the affected rows/columns)

namespace detail {

inline void check_mode(const GaussianState& s, int i) {
  if (i < 0 || i >= s.n_modes) throw ArgumentError("mode index " + std::to_string(i) + " out of range");
}

// Applies a 2x2 real rotation [[a, b], [c, d]] to quadrature indices (u, v):
// r_u' = a r_u + b r_v, r_v' = c r_u + d r_v.
inline void mix_quadratures(GaussianState& s, int u, int v, double a, double b, double c, double d) {
  Matrix& G = s.covariance;
  const Eigen::RowVectorXd ru = G.row(u), rv = G.row(v);
  G.row(u) = a * ru + b * rv;
  G.row(v) = c * ru + d * rv;
  const Vector cu = G.col(u), cv = G.col(v);
  G.col(u) = a * cu + b * cv;
  G.col(v) = c * cu + d * cv;
  const double du = s.displacement[u], dv = s.displacement[v];
  s.displacement[u] = a * du + b * dv;
  s.displacement[v] = c * du + d * dv;
}

}  // namespace detail

inline void apply_beam_splitter(GaussianState& s, int i, int j, double eta) {
  if (!(eta >= 0.0 && eta <= 1.0)) throw ArgumentError("beam splitter: transmittance must be in [0, 1]");
  detail::check_mode(s, i);
  detail::check_mode(s, j);
  if (i == j) throw ArgumentError("beam splitter: modes must differ");
  if (eta == 1.0) return;
  const double t = std::sqrt(eta), r = std::sqrt(1.0 - eta);
  for (int q = 0; q < 2; ++q) detail::mix_quadratures(s, 2 * i + q, 2 * j + q, t, r, -r, t);
}

inline void apply_phase_shift(GaussianState& s, int i, double phi) {
  detail::check_mode(s, i);
  const double c = std::cos(phi), sn = std::sin(phi);
  detail::mix_quadratures(s, 2 * i, 2 * i + 1, c, -sn, sn, c);
}

/// new_i = sqrt(eta) old_i + sqrt(1-eta) old_j; new_j = -sqrt(1-eta) old_i + sqrt(eta) old_j.
inline GaussianState beam_splitter(GaussianState s, int i, int j, double eta) {
  apply_beam_splitter(s, i, j, eta);
  return s;
}

/// Rotates (x_i, p_i) by phi.
inline GaussianState phase_shift(GaussianState s, int i, double phi) {
  apply_phase_shift(s, i, phi);
  return s;
}

// ---------------------------------------------------------------------------
// Detection

/// Probability that every mode in `modes` is in vacuum:
/// 2^k / sqrt(det(gamma_sub + I)). Requires zero displacement.
inline double no_click_probability(const GaussianState& s, std::span<const int> modes) {
  if (modes.empty()) throw ArgumentError("no_click_probability: empty mode subset");
  if (!s.displacement.isZero(0.0)) throw UnsupportedInputError("no_click_probability: displaced states are not supported");
  const int k = static_cast<int>(modes.size());
  std::vector<int> idx;
  idx.reserve(2 * k);
  for (int m : modes) {
    detail::check_mode(s, m);
    idx.push_back(2 * m);
    idx.push_back(2 * m + 1);
  }
  Matrix sub(2 * k, 2 * k);
  for (int a = 0; a < 2 * k; ++a)
    for (int b = 0; b < 2 * k; ++b) sub(a, b) = s.covariance(idx[a], idx[b]);
  sub.diagonal().array() += 1.0;
  Eigen::LLT<Matrix> llt(sub);
  if (llt.info() != Eigen::Success) throw NumericError("no_click_probability: reduced covariance is not positive definite");
  const double log_det = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  return std::exp(k * std::numbers::ln2 - 0.5 * log_det);
}

inline double no_click_probability(const GaussianState& s, std::initializer_list<int> modes) {
  return no_click_probability(s, std::span<const int>(modes.begin(), modes.size()));
}

// ---------------------------------------------------------------------------
// Scenario

enum class InputKind { sv, tmsv, thermal };

inline std::string_view to_string(InputKind k) {
  switch (k) {
    case InputKind::sv: return "sv";
    case InputKind::tmsv: return "tmsv";
    case InputKind::thermal: return "thermal";
  }
  return "?";
}

inline InputKind parse_input_kind(std::string_view s) {
  if (s == "sv") return InputKind::sv;
  if (s == "tmsv") return InputKind::tmsv;
  if (s == "thermal") return InputKind::thermal;
  throw ArgumentError("unknown input kind '" + std::string(s) + "'");
}

struct ScenarioParams {
  InputKind input = InputKind::sv;
  double squeezing = 0.2;      // sv, tmsv
  double mean_photons = 0.04;  // thermal, upper arm
  double mean_photons_2 = 0.04;  // thermal, lower arm
  double eta_u = 0.8;
  double eta_d = 0.8;
  double overlap = 1.0;  // temporal mode overlap zeta
  // Spectral overlap of the two photons; multiplies `overlap`. Unset means 1
  // for sv/thermal and 0 for tmsv (non-degenerate photons).
  std::optional<double> spectral_overlap;
  int phase_grid = 32;
  // Filter detuning in GHz. When set, g2_objective blends the degenerate (sv)
  // and non-degenerate (tmsv) sources.
  std::optional<double> detuning_ghz;
  double filter_sigma_ghz = 5.1;
  // Squeezing of the non-degenerate source used in the detuning blend. Unset
  // means the value giving the same mean photon number as the sv source.
  std::optional<double> nondegenerate_squeezing;

  double effective_spectral_overlap() const {
    if (spectral_overlap) return *spectral_overlap;
    return input == InputKind::tmsv ? 0.0 : 1.0;
  }

  double effective_nondegenerate_squeezing() const {
    if (nondegenerate_squeezing) return *nondegenerate_squeezing;
    // 2 sinh^2 r' = sinh^2 r
    return std::asinh(std::sinh(squeezing) / std::numbers::sqrt2);
  }

  void validate() const {
    auto unit = [](double v, const char* name) {
      if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError(std::string("scenario: ") + name + " must be in [0, 1]");
    };
    auto nonneg = [](double v, const char* name) {
      if (!(v >= 0.0) || !std::isfinite(v)) throw ArgumentError(std::string("scenario: ") + name + " must be >= 0");
    };
    nonneg(squeezing, "squeezing");
    nonneg(mean_photons, "mean_photons");
    nonneg(mean_photons_2, "mean_photons_2");
    unit(eta_u, "eta_u");
    unit(eta_d, "eta_d");
    unit(overlap, "overlap");
    if (spectral_overlap) unit(*spectral_overlap, "spectral_overlap");
    if (phase_grid < 1) throw ArgumentError("scenario: phase_grid must be >= 1");
    if (detuning_ghz) nonneg(*detuning_ghz, "detuning");
    if (!(filter_sigma_ghz > 0.0)) throw ArgumentError("scenario: filter_sigma must be > 0");
    if (nondegenerate_squeezing) nonneg(*nondegenerate_squeezing, "nondegenerate_squeezing");
  }
};

struct ClickProbabilities {
  double p_d1 = 0.0;
  double p_d2 = 0.0;
  double p_coinc = 0.0;
};

namespace hom_modes {
inline constexpr int upper = 0, lower = 1, loss_upper = 2, loss_lower = 3, dist_upper = 4, dist_lower = 5,
                     mix_upper = 6, mix_lower = 7, count = 8;
inline constexpr std::array<int, 3> detector1{upper, dist_upper, dist_lower};
inline constexpr std::array<int, 3> detector2{lower, mix_upper, mix_lower};
inline constexpr std::array<int, 6> both{upper, dist_upper, dist_lower, lower, mix_upper, mix_lower};
}  // namespace hom_modes

/// Eight-mode state after the sources and loss splitters, before the phase
/// shifter (phase-independent part of the pipeline).
inline GaussianState hom_prephase_state(const ScenarioParams& p) {
  using namespace hom_modes;
  GaussianState s = GaussianState::vacuum(count);
  switch (p.input) {
    case InputKind::sv:
      embed(s, make_squeezed(p.squeezing), upper);
      apply_beam_splitter(s, upper, lower, 0.5);
      break;
    case InputKind::tmsv: embed(s, make_tmsv(p.squeezing), upper); break;
    case InputKind::thermal:
      embed(s, make_thermal(p.mean_photons), upper);
      embed(s, make_thermal(p.mean_photons_2), lower);
      break;
  }
  apply_beam_splitter(s, upper, loss_upper, p.eta_u);
  apply_beam_splitter(s, lower, loss_lower, p.eta_d);
  return s;
}

/// Remainder of the pipeline for one phase value: phase, overlap splitters,
/// final 50/50 splitters.
inline GaussianState hom_final_state(GaussianState s, const ScenarioParams& p, double phi) {
  using namespace hom_modes;
  const double zeta = p.overlap * p.effective_spectral_overlap();
  apply_phase_shift(s, lower, phi);
  apply_beam_splitter(s, upper, dist_upper, zeta);
  apply_beam_splitter(s, lower, dist_lower, zeta);
  apply_beam_splitter(s, upper, lower, 0.5);
  apply_beam_splitter(s, dist_upper, mix_upper, 0.5);
  apply_beam_splitter(s, dist_lower, mix_lower, 0.5);
  return s;
}

inline ClickProbabilities click_probabilities(const GaussianState& s) {
  const double n1 = no_click_probability(s, hom_modes::detector1);
  const double n2 = no_click_probability(s, hom_modes::detector2);
  const double n12 = no_click_probability(s, hom_modes::both);
  return {1.0 - n1, 1.0 - n2, 1.0 - n1 - n2 + n12};
}

/// Phase-averaged click probabilities of the interferometer.
inline ClickProbabilities hom_probabilities(const ScenarioParams& p) {
  p.validate();
  const GaussianState pre = hom_prephase_state(p);
  ClickProbabilities acc;
  for (int k = 0; k < p.phase_grid; ++k) {
    const double phi = 2.0 * std::numbers::pi * k / p.phase_grid;
    const ClickProbabilities c = click_probabilities(hom_final_state(pre, p, phi));
    acc.p_d1 += c.p_d1;
    acc.p_d2 += c.p_d2;
    acc.p_coinc += c.p_coinc;
  }
  const double inv = 1.0 / p.phase_grid;
  acc.p_d1 *= inv;
  acc.p_d2 *= inv;
  acc.p_coinc *= inv;
  // Round-off guard: probabilities are mathematically in [0, 1].
  acc.p_d1 = std::clamp(acc.p_d1, 0.0, 1.0);
  acc.p_d2 = std::clamp(acc.p_d2, 0.0, 1.0);
  acc.p_coinc = std::clamp(acc.p_coinc, 0.0, std::min(acc.p_d1, acc.p_d2));
  return acc;
}

/// Weight of the degenerate contribution at filter detuning dnu.
inline double spectral_weight(double detuning_ghz, double filter_sigma_ghz) {
  return std::exp(-detuning_ghz * detuning_ghz / (2.0 * filter_sigma_ghz * filter_sigma_ghz));
}

/// Click probabilities including the detuning blend when `detuning_ghz` is set:
/// P = w P_sv + (1 - w) P_tmsv(zeta_eff = 0).
inline ClickProbabilities blended_probabilities(const ScenarioParams& p) {
  p.validate();
  if (!p.detuning_ghz) return hom_probabilities(p);
  ScenarioParams deg = p;
  deg.input = InputKind::sv;
  deg.detuning_ghz.reset();
  ScenarioParams nondeg = deg;
  nondeg.input = InputKind::tmsv;
  nondeg.squeezing = p.effective_nondegenerate_squeezing();
  nondeg.spectral_overlap = 0.0;
  const double w = spectral_weight(*p.detuning_ghz, p.filter_sigma_ghz);
  ClickProbabilities out;
  if (w > 0.0) {
    const ClickProbabilities a = hom_probabilities(deg);
    out.p_d1 += w * a.p_d1;
    out.p_d2 += w * a.p_d2;
    out.p_coinc += w * a.p_coinc;
  }
  if (w < 1.0) {
    const ClickProbabilities b = hom_probabilities(nondeg);
    out.p_d1 += (1.0 - w) * b.p_d1;
    out.p_d2 += (1.0 - w) * b.p_d2;
    out.p_coinc += (1.0 - w) * b.p_coinc;
  }
  return out;
}

/// Singles probabilities at or below this are round-off from 1 - P(no click).
inline constexpr double singles_floor = 1e-13;

inline double g2_from_probabilities(const ClickProbabilities& c) {
  if (!(c.p_d1 > singles_floor && c.p_d2 > singles_floor))
    throw DegenerateObjectiveError("g2: singles probability is zero; setting carries no light to a detector");
  return c.p_coinc / (c.p_d1 * c.p_d2);
}

/// Normalized zero-delay correlation P_D1D2 / (P_D1 P_D2).
inline double g2_objective(const ScenarioParams& p) { return g2_from_probabilities(blended_probabilities(p)); }

}  // namespace qncal
