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

// The sequential loop: initial design, then fit / hyperparameter MLE /
// propose / measure until the evaluation budget is spent. Also a
// finite-difference gradient-descent baseline sharing the same record format.

#include "qncal/acquisition.hpp"
#include "qncal/core.hpp"
#include "qncal/design.hpp"
#include "qncal/gp.hpp"
#include "qncal/measurement.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <istream>
#include <limits>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace qncal {

struct BoConfig {
  std::optional<int> n_init;  // unset: 12 for D <= 2, 15 otherwise
  int n_max = 30;
  DesignSpec design{};        // n_points and dim are filled in by run_bo
  KernelFamily kernel_family = KernelFamily::matern52;
  AcquisitionConfig acquisition{};
  HyperparameterBounds bounds{};
  int restarts = 8;
  int refit_every = 1;
  // Extra candidates scattered around the incumbent each iteration
  // (continuous domains only); 0 disables.
  int local_candidates = 256;
  double local_radius = 0.05;
  std::optional<int> patience;  // stop after this many non-improving evaluations
  bool record_wall_time = false;
  std::uint64_t seed = 0;

  int initial_points(Eigen::Index dim) const { return n_init ? *n_init : (dim <= 2 ? 12 : 15); }

  void validate(Eigen::Index dim) const {
    const int n0 = initial_points(dim);
    if (n0 < 2) throw ArgumentError("bo: n_init must be >= 2");
    if (n_max < n0) throw ArgumentError("bo: budget must be >= n_init");
    if (restarts < 1) throw ArgumentError("bo: restarts must be >= 1");
    if (refit_every < 1) throw ArgumentError("bo: refit_every must be >= 1");
    if (local_candidates < 0) throw ArgumentError("bo: local_candidates must be >= 0");
    if (patience && *patience < 1) throw ArgumentError("bo: patience must be >= 1");
    acquisition.validate();
    bounds.validate();
  }
};

struct GdConfig {
  double step_size = 0.01;
  double fd_step = 1e-3;  // in normalized coordinates
  int max_iterations = 10;
  std::optional<int> max_evaluations;
  std::uint64_t seed = 0;

  void validate() const {
    if (!(step_size > 0.0)) throw ArgumentError("gd: step size must be > 0");
    if (!(fd_step > 0.0) || fd_step >= 1.0) throw ArgumentError("gd: fd step must be in (0, 1)");
    if (max_iterations < 1) throw ArgumentError("gd: max_iterations must be >= 1");
    if (max_evaluations && *max_evaluations < 1) throw ArgumentError("gd: max_evaluations must be >= 1");
  }
};

struct RunEntry {
  int iter = 0;
  Vector x;
  double y = 0.0;
  double best = 0.0;
  std::optional<KernelConfig> theta;  // hyperparameters behind the proposal
  double t_wall_ms = 0.0;
};

struct RunRecord {
  std::string method = "bo";
  Box domain;
  std::uint64_t seed = 0;
  nlohmann::json config = nlohmann::json::object();
  std::vector<RunEntry> entries;
  bool complete = false;
  std::string error;

  double best() const { return entries.empty() ? std::numeric_limits<double>::infinity() : entries.back().best; }

  /// Best-so-far after `n` evaluations (the last value if the record is shorter).
  double best_at(int n) const {
    if (entries.empty()) return std::numeric_limits<double>::infinity();
    const auto i = std::min<std::size_t>(static_cast<std::size_t>(std::max(n, 1)), entries.size());
    return entries[i - 1].best;
  }
};

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const KernelConfig& c) {
  nlohmann::json j{{"family", to_string(c.family)},
                   {"length_scale", c.length_scale},
                   {"output_scale", c.output_scale},
                   {"noise_variance", c.noise_variance}};
  if (c.family == KernelFamily::periodic) j["period"] = c.period;
  return j;
}

inline KernelConfig kernel_config_from_json(const nlohmann::json& j) {
  KernelConfig c;
  c.family = parse_kernel_family(j.at("family").get<std::string>());
  c.length_scale = j.at("length_scale").get<double>();
  c.output_scale = j.at("output_scale").get<double>();
  c.noise_variance = j.at("noise_variance").get<double>();
  c.period = j.value("period", c.period);
  return c;
}

inline nlohmann::json to_json(const BoConfig& c) {
  nlohmann::json j{{"n_max", c.n_max},
                   {"design", to_string(c.design.scheme)},
                   {"kernel", to_string(c.kernel_family)},
                   {"acquisition", to_string(c.acquisition.kind)},
                   {"beta", c.acquisition.beta},
                   {"candidate_count", c.acquisition.candidate_count},
                   {"exclude_visited", c.acquisition.exclude_visited},
                   {"restarts", c.restarts},
                   {"refit_every", c.refit_every},
                   {"local_candidates", c.local_candidates}};
  if (c.n_init) j["n_init"] = *c.n_init;
  if (c.patience) j["patience"] = *c.patience;
  return j;
}

inline nlohmann::json to_json(const GdConfig& c) {
  nlohmann::json j{{"step_size", c.step_size}, {"fd_step", c.fd_step}, {"max_iterations", c.max_iterations}};
  if (c.max_evaluations) j["max_evaluations"] = *c.max_evaluations;
  return j;
}

namespace detail {
inline std::vector<double> to_std(const Vector& v) { return std::vector<double>(v.data(), v.data() + v.size()); }
inline Vector from_std(const std::vector<double>& v) { return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size())); }
}  // namespace detail

/// Header line then one line per entry.
inline void write_jsonl(std::ostream& out, const RunRecord& r) {
  nlohmann::json h{{"type", "header"},
                   {"method", r.method},
                   {"domain", {{"lower", detail::to_std(r.domain.lower)}, {"upper", detail::to_std(r.domain.upper)}}},
                   {"config", r.config},
                   {"seed", r.seed},
                   {"complete", r.complete},
                   {"entries", r.entries.size()}};
  if (!r.error.empty()) h["error"] = r.error;
  out << h.dump() << '\n';
  for (const RunEntry& e : r.entries) {
    nlohmann::json j{{"iter", e.iter},
                     {"x", detail::to_std(e.x)},
                     {"y", e.y},
                     {"best", e.best},
                     {"theta", e.theta ? to_json(*e.theta) : nlohmann::json(nullptr)},
                     {"t_wall_ms", e.t_wall_ms}};
    out << j.dump() << '\n';
  }
}

inline std::vector<RunRecord> read_jsonl(std::istream& in) {
  std::vector<RunRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto j = nlohmann::json::parse(line);
    if (j.value("type", std::string()) == "header") {
      RunRecord r;
      r.method = j.at("method").get<std::string>();
      r.domain = Box(detail::from_std(j.at("domain").at("lower").get<std::vector<double>>()),
                     detail::from_std(j.at("domain").at("upper").get<std::vector<double>>()));
      r.config = j.at("config");
      r.seed = j.at("seed").get<std::uint64_t>();
      r.complete = j.at("complete").get<bool>();
      r.error = j.value("error", std::string());
      out.push_back(std::move(r));
      continue;
    }
    if (out.empty()) throw ArgumentError("run record: entry before header");
    RunEntry e;
    e.iter = j.at("iter").get<int>();
    e.x = detail::from_std(j.at("x").get<std::vector<double>>());
    e.y = j.at("y").get<double>();
    e.best = j.at("best").get<double>();
    if (!j.at("theta").is_null()) e.theta = kernel_config_from_json(j.at("theta"));
    e.t_wall_ms = j.at("t_wall_ms").get<double>();
    out.back().entries.push_back(std::move(e));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Loop helpers

namespace detail {

class Recorder {
 public:
  Recorder(RunRecord& rec, bool timing) : rec_(rec), timing_(timing), t0_(std::chrono::steady_clock::now()) {}

  /// Evaluates with one retry; returns false (and flags the record) on failure.
  template <class F>
  bool measure(F&& f, const Vector& x, std::optional<KernelConfig> theta, double* y_out) {
    double y = 0.0;
    for (int attempt = 0;; ++attempt) {
      try {
        y = f(x);
        if (!std::isfinite(y)) throw ObjectiveError("objective returned a non-finite value");
        break;
      } catch (const ObjectiveError& e) {
        if (attempt == 0) {
          warn(std::string("evaluation failed, retrying: ") + e.what());
          continue;
        }
        rec_.error = e.what();
        rec_.complete = false;
        return false;
      }
    }
    RunEntry e;
    e.iter = static_cast<int>(rec_.entries.size()) + 1;
    e.x = x;
    e.y = y;
    e.best = rec_.entries.empty() ? y : std::min(rec_.entries.back().best, y);
    e.theta = std::move(theta);
    if (timing_)
      e.t_wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0_).count();
    rec_.entries.push_back(std::move(e));
    if (y_out) *y_out = y;
    return true;
  }

 private:
  RunRecord& rec_;
  bool timing_;
  std::chrono::steady_clock::time_point t0_;
};

inline Eigen::Index nearest_row(const Matrix& C, const Vector& u) {
  Eigen::Index best = 0;
  (C.rowwise() - u.transpose()).rowwise().squaredNorm().minCoeff(&best);
  return best;
}

}  // namespace detail

/// Minimizes `objective` over `domain`. When `candidates` (physical rows) are
/// given, every proposal and every initial point is one of them; otherwise a
/// Sobol set plus a cloud around the incumbent is scored each iteration.
template <class F>
RunRecord run_bo(F&& objective, const Box& domain, const BoConfig& config,
                 const std::optional<Matrix>& candidates = std::nullopt) {
  domain.validate();
  const Eigen::Index D = domain.dim();
  config.validate(D);
  const int n0 = config.initial_points(D);

  RunRecord rec;
  rec.method = "bo";
  rec.domain = domain;
  rec.seed = config.seed;
  rec.config = to_json(config);
  detail::Recorder recorder(rec, config.record_wall_time);
  Rng rng(config.seed);

  std::optional<Matrix> nodes;  // normalized
  if (candidates) {
    if (candidates->cols() != D || candidates->rows() < 1) throw ArgumentError("bo: candidate set has wrong shape");
    nodes = domain.normalize_rows(*candidates);
  }
  const Matrix sobol = nodes ? Matrix() : sobol_points(config.acquisition.candidate_count, static_cast<int>(D));

  Matrix U(config.n_max, D);  // normalized inputs observed so far
  Vector Y(config.n_max);
  int n = 0;
  int since_improvement = 0;
  auto observe = [&](Vector u, std::optional<KernelConfig> theta) {
    if (nodes) u = nodes->row(detail::nearest_row(*nodes, u)).transpose();
    const Vector x = domain.denormalize(u);
    double y = 0.0;
    const double prev = rec.entries.empty() ? std::numeric_limits<double>::infinity() : rec.entries.back().best;
    if (!recorder.measure(objective, x, std::move(theta), &y)) return false;
    U.row(n) = u.transpose();
    Y[n] = y;
    ++n;
    since_improvement = y < prev ? 0 : since_improvement + 1;
    return true;
  };

  DesignSpec ds = config.design;
  ds.n_points = n0;
  ds.dim = static_cast<int>(D);
  const Matrix init = generate_design(ds, rng);
  for (int i = 0; i < n0; ++i)
    if (!observe(init.row(i).transpose(), std::nullopt)) return rec;

  std::optional<KernelConfig> theta;
  Matrix cloud(nodes ? 0 : config.local_candidates, D);
  std::normal_distribution<double> gauss(0.0, config.local_radius);
  while (n < config.n_max) {
    if (config.patience && since_improvement >= *config.patience) break;
    Dataset data{U.topRows(n), Y.head(n)};
    if (!theta || (n - n0) % config.refit_every == 0)
      theta = optimize_hyperparameters(data, config.kernel_family, config.bounds, config.restarts, rng);
    const GpPosterior post = fit(std::move(data), *theta);

    Vector u;
    if (nodes) {
      u = propose_next(post, config.acquisition, *nodes);
    } else {
      Eigen::Index inc = 0;
      Y.head(n).minCoeff(&inc);
      for (Eigen::Index i = 0; i < cloud.rows(); ++i)
        for (Eigen::Index d = 0; d < D; ++d) cloud(i, d) = std::clamp(U(inc, d) + gauss(rng), 0.0, 1.0);
      Matrix C(sobol.rows() + cloud.rows(), D);
      C << sobol, cloud;
      u = propose_next(post, config.acquisition, C);
    }
    if (!observe(std::move(u), theta)) return rec;
  }
  rec.complete = true;
  return rec;
}

inline RunRecord run_bo(const Objective& objective, const BoConfig& config) {
  return run_bo(objective.evaluate, objective.domain, config, objective.nodes);
}

/// x <- clip(x - step * grad f), forward differences in normalized
/// coordinates (backward at the upper face); D + 1 evaluations per iteration.
template <class F>
RunRecord gradient_descent_baseline(F&& objective, const Box& domain, const GdConfig& config) {
  domain.validate();
  config.validate();
  const Eigen::Index D = domain.dim();

  RunRecord rec;
  rec.method = "gd";
  rec.domain = domain;
  rec.seed = config.seed;
  rec.config = to_json(config);
  detail::Recorder recorder(rec, false);
  Rng rng(config.seed);

  const int budget = config.max_evaluations ? *config.max_evaluations : std::numeric_limits<int>::max();
  auto eval = [&](const Vector& u, double* y) {
    return recorder.measure(objective, domain.denormalize(u), std::nullopt, y);
  };

  Vector u(D);
  for (Eigen::Index d = 0; d < D; ++d) u[d] = uniform01(rng);
  for (int it = 0; it < config.max_iterations; ++it) {
    if (static_cast<int>(rec.entries.size()) + D + 1 > budget) break;
    double f0 = 0.0;
    if (!eval(u, &f0)) return rec;
    Vector g(D);
    for (Eigen::Index d = 0; d < D; ++d) {
      Vector v = u;
      const double h = u[d] + config.fd_step <= 1.0 ? config.fd_step : -config.fd_step;
      v[d] += h;
      double f1 = 0.0;
      if (!eval(v, &f1)) return rec;
      g[d] = (f1 - f0) / h;
    }
    u = (u - config.step_size * g).cwiseMax(0.0).cwiseMin(1.0);
  }
  rec.complete = true;
  return rec;
}

inline RunRecord gradient_descent_baseline(const Objective& objective, const GdConfig& config) {
  return gradient_descent_baseline(objective.evaluate, objective.domain, config);
}

}  // namespace qncal
