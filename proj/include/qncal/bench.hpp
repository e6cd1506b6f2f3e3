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

// Benchmark harness: tabulated baselines, repeated seeded trials, convergence
// curves and bootstrap comparisons of configuration variants.

#include "qncal/bayes_opt.hpp"
#include "qncal/core.hpp"
#include "qncal/detail/bfgs.hpp"
#include "qncal/measurement.hpp"
#include "qncal/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <limits>
#include <mutex>
#include <numeric>
#include <optional>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace qncal {

// ---------------------------------------------------------------------------
// Baselines

/// Per-axis node counts, written "35x10".
inline std::vector<int> parse_grid_counts(std::string_view s) {
  std::vector<int> out;
  std::size_t pos = 0;
  while (pos <= s.size()) {
    const std::size_t x = std::min(s.find('x', pos), s.size());
    const std::string_view tok = s.substr(pos, x - pos);
    int v = 0;
    const auto res = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    if (tok.empty() || res.ec != std::errc() || res.ptr != tok.data() + tok.size() || v < 2)
      throw ArgumentError("grid spec '" + std::string(s) + "': expected counts >= 2 like 35x10");
    out.push_back(v);
    pos = x + 1;
  }
  return out;
}

/// Row-major (first axis slowest) nodes of an evenly spaced grid over `box`.
inline Matrix grid_nodes(const Box& box, const std::vector<int>& counts) {
  if (static_cast<Eigen::Index>(counts.size()) != box.dim()) throw ArgumentError("grid spec dimension does not match the domain");
  Eigen::Index total = 1;
  for (int c : counts) {
    if (c < 2) throw ArgumentError("grid spec: every axis needs >= 2 nodes");
    total *= c;
  }
  const Eigen::Index D = box.dim();
  Matrix X(total, D);
  std::vector<int> idx(D, 0);
  for (Eigen::Index r = 0; r < total; ++r) {
    for (Eigen::Index d = 0; d < D; ++d)
      X(r, d) = box.lower[d] + (box.upper[d] - box.lower[d]) * idx[d] / (counts[d] - 1);
    for (Eigen::Index d = D - 1; d >= 0; --d) {
      if (++idx[d] < counts[d]) break;
      idx[d] = 0;
    }
  }
  return X;
}

/// Tabulates the scenario objective over a grid. With `noise`, every node gets
/// one Poisson counting run from a generator seeded with `noise->seed`.
inline Grid generate_baseline(const Scenario& scenario, const std::vector<int>& counts,
                              const std::optional<CountConfig>& noise = std::nullopt) {
  const Matrix X = grid_nodes(scenario.domain(), counts);
  Vector y(X.rows());
  std::optional<Rng> rng;
  if (noise) {
    noise->validate();
    rng.emplace(noise->seed);
  }
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    const Vector x = X.row(i).transpose();
    y[i] = noise ? noisy_g2(blended_probabilities(scenario.at(x)), *noise, *rng) : scenario.g2(x);
  }
  return Grid(X, y);
}

struct ReferenceMinimum {
  Vector x;
  double value = std::numeric_limits<double>::infinity();
};

/// Noiseless minimum: exhaustive scan of a `per_axis`^D grid, then a bounded
/// quasi-Newton polish (finite-difference gradient) from the best `polish`
/// nodes.
inline ReferenceMinimum reference_minimum(const Scenario& scenario, int per_axis = 41, int polish = 4) {
  const Box box = scenario.domain();
  const Matrix X = grid_nodes(box, std::vector<int>(box.dim(), per_axis));
  std::vector<std::pair<double, Eigen::Index>> vals;
  vals.reserve(X.rows());
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    double v = std::numeric_limits<double>::infinity();
    try {
      v = scenario.g2(X.row(i).transpose());
    } catch (const DegenerateObjectiveError&) {
    }
    vals.emplace_back(v, i);
  }
  std::sort(vals.begin(), vals.end());
  ReferenceMinimum best;
  auto f = [&](const Vector& u, Vector* g) {
    auto eval = [&](const Vector& v) {
      try {
        return scenario.g2(box.denormalize(v));
      } catch (const DegenerateObjectiveError&) {
        return std::numeric_limits<double>::infinity();
      }
    };
    const double f0 = eval(u);
    if (g) {
      g->resize(u.size());
      for (Eigen::Index d = 0; d < u.size(); ++d) {
        const double h = u[d] + 1e-6 <= 1.0 ? 1e-6 : -1e-6;
        Vector v = u;
        v[d] += h;
        (*g)[d] = (eval(v) - f0) / h;
      }
    }
    return f0;
  };
  const Eigen::Index D = box.dim();
  for (int k = 0; k < polish && k < static_cast<int>(vals.size()); ++k) {
    const Vector x0 = X.row(vals[k].second).transpose();
    if (vals[k].first < best.value) best = {x0, vals[k].first};
    auto r = detail::minimize_box_bfgs(f, box.normalize(x0), Vector::Zero(D), Vector::Ones(D));
    if (r.value < best.value) best = {box.denormalize(r.x), r.value};
  }
  return best;
}

// ---------------------------------------------------------------------------
// Repeated trials

enum class Method { bo, gd };

struct BenchmarkSpec {
  ObjectiveSpec objective;
  Method method = Method::bo;
  BoConfig bo;
  GdConfig gd;
  int n_trials = 100;
  std::uint64_t master_seed = 0;
  int threads = 0;  // 0: hardware concurrency

  void validate() const {
    if (n_trials < 1) throw ArgumentError("benchmark: trials must be >= 1");
    if (threads < 0) throw ArgumentError("benchmark: threads must be >= 0");
  }
};

struct ConvergenceCurve {
  std::vector<double> mean, stddev, min, max;
  int trials = 0;    // aggregated (complete) trials
  int failures = 0;  // excluded trials
  std::optional<double> reference;

  std::size_t size() const { return mean.size(); }

  void write_csv(std::ostream& out) const {
    out << "iteration,mean,std,min,max\n";
    for (std::size_t i = 0; i < size(); ++i)
      out << (i + 1) << ',' << Grid::format_double(mean[i]) << ',' << Grid::format_double(stddev[i]) << ','
          << Grid::format_double(min[i]) << ',' << Grid::format_double(max[i]) << '\n';
  }
};

struct BenchmarkResult {
  ConvergenceCurve curve;
  std::vector<RunRecord> records;  // trial order

  /// Best-so-far after `n` evaluations, one value per complete trial.
  std::vector<double> best_at(int n) const {
    std::vector<double> v;
    for (const RunRecord& r : records)
      if (r.complete) v.push_back(r.best_at(n));
    return v;
  }

  void write_jsonl(std::ostream& out) const {
    for (const RunRecord& r : records) qncal::write_jsonl(out, r);
  }
};

/// Runs `n` indexed jobs on a small worker pool; results land by index.
template <class Job>
void parallel_for(int n, int threads, Job&& job) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (int i = 0; i < n; ++i) job(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr failure;
  std::mutex m;
  std::vector<std::thread> pool;
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int i; (i = next.fetch_add(1)) < n;) {
        try {
          job(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(m);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

inline ConvergenceCurve aggregate(const std::vector<RunRecord>& records, int length) {
  ConvergenceCurve c;
  std::vector<const RunRecord*> ok;
  for (const RunRecord& r : records) (r.complete ? ok.push_back(&r) : void(++c.failures));
  c.trials = static_cast<int>(ok.size());
  if (ok.empty()) return c;
  for (int i = 1; i <= length; ++i) {
    double s = 0.0, lo = std::numeric_limits<double>::infinity(), hi = -lo;
    for (const RunRecord* r : ok) {
      const double b = r->best_at(i);
      s += b;
      lo = std::min(lo, b);
      hi = std::max(hi, b);
    }
    const double m = s / ok.size();
    double ss = 0.0;
    for (const RunRecord* r : ok) ss += (r->best_at(i) - m) * (r->best_at(i) - m);
    c.mean.push_back(m);
    c.stddev.push_back(ok.size() > 1 ? std::sqrt(ss / (ok.size() - 1)) : 0.0);
    c.min.push_back(lo);
    c.max.push_back(hi);
  }
  return c;
}

/// Trial t uses seed derive_seed(master, t) for the optimizer and an
/// independent stream for measurement noise.
inline BenchmarkResult run_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  BenchmarkResult out;
  out.records.resize(spec.n_trials);
  // Parse a grid file once; every trial replays the same table.
  std::optional<Objective> shared;
  if (spec.objective.source == ObjectiveSource::grid) shared = make_objective(spec.objective);

  parallel_for(spec.n_trials, spec.threads, [&](int t) {
    const std::uint64_t seed = derive_seed(spec.master_seed, static_cast<std::uint64_t>(t));
    ObjectiveSpec os = spec.objective;
    if (os.noise) os.noise->seed = derive_seed(seed, 0x6e6f697365ULL);
    const Objective obj = shared ? *shared : make_objective(os);
    try {
      if (spec.method == Method::bo) {
        BoConfig c = spec.bo;
        c.seed = seed;
        out.records[t] = run_bo(obj, c);
      } else {
        GdConfig c = spec.gd;
        c.seed = seed;
        out.records[t] = gradient_descent_baseline(obj, c);
      }
    } catch (const NumericError& e) {
      RunRecord& r = out.records[t];
      r.method = spec.method == Method::bo ? "bo" : "gd";
      r.domain = obj.domain;
      r.seed = seed;
      r.complete = false;
      r.error = e.what();
    }
  });

  int length = spec.method == Method::bo ? spec.bo.n_max : 0;
  if (spec.method == Method::gd)
    for (const RunRecord& r : out.records) length = std::max(length, static_cast<int>(r.entries.size()));
  out.curve = aggregate(out.records, length);
  if (out.curve.failures > 0) warn("benchmark: " + std::to_string(out.curve.failures) + " trial(s) failed and were excluded");
  return out;
}

// ---------------------------------------------------------------------------
// Comparisons

enum class SweepAxis { kernel, acquisition, design };

inline std::string_view to_string(SweepAxis a) {
  switch (a) {
    case SweepAxis::kernel: return "kernel";
    case SweepAxis::acquisition: return "acquisition";
    case SweepAxis::design: return "design";
  }
  return "?";
}

inline SweepAxis parse_sweep_axis(std::string_view s) {
  if (s == "kernel") return SweepAxis::kernel;
  if (s == "acquisition" || s == "acq") return SweepAxis::acquisition;
  if (s == "design") return SweepAxis::design;
  throw ArgumentError("unknown sweep axis '" + std::string(s) + "'");
}

/// Copy of `base` with one variant applied.
inline BoConfig apply_variant(BoConfig base, SweepAxis axis, std::string_view variant) {
  switch (axis) {
    case SweepAxis::kernel: base.kernel_family = parse_kernel_family(variant); break;
    case SweepAxis::acquisition: base.acquisition.kind = parse_acquisition_kind(variant); break;
    case SweepAxis::design: base.design.scheme = parse_design_scheme(variant); break;
  }
  return base;
}

struct Interval90 {
  double lo = 0.0;
  double hi = 0.0;
};

/// Percentile bootstrap interval of the mean.
inline Interval90 bootstrap_mean_interval(const std::vector<double>& v, std::uint64_t seed, int resamples = 10000,
                                          double level = 0.90) {
  if (v.empty()) throw ArgumentError("bootstrap: empty sample");
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> pick(0, v.size() - 1);
  std::vector<double> means(resamples);
  for (int b = 0; b < resamples; ++b) {
    double s = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) s += v[pick(rng)];
    means[b] = s / v.size();
  }
  std::sort(means.begin(), means.end());
  const double a = 0.5 * (1.0 - level);
  auto q = [&](double p) {
    const double pos = p * (resamples - 1);
    const auto i = static_cast<std::size_t>(pos);
    const double f = pos - i;
    return i + 1 < means.size() ? means[i] * (1.0 - f) + means[i + 1] * f : means[i];
  };
  return {q(a), q(1.0 - a)};
}

struct VariantResult {
  std::string name;
  BenchmarkResult result;
  double mean_at = 0.0;
  Interval90 interval;
  int rank = 0;  // 1 = lowest mean
};

struct ComparisonReport {
  SweepAxis axis = SweepAxis::kernel;
  int at_iteration = 30;
  std::vector<VariantResult> variants;

  const VariantResult& find(std::string_view name) const {
    for (const auto& v : variants)
      if (v.name == name) return v;
    throw ArgumentError("comparison: no variant '" + std::string(name) + "'");
  }

  nlohmann::json to_json() const {
    nlohmann::json vs = nlohmann::json::array();
    for (const auto& v : variants) {
      const auto& c = v.result.curve;
      vs.push_back({{"name", v.name},
                    {"rank", v.rank},
                    {"mean_best", v.mean_at},
                    {"ci90", {v.interval.lo, v.interval.hi}},
                    {"trials", c.trials},
                    {"failures", c.failures},
                    {"curve", {{"mean", c.mean}, {"std", c.stddev}, {"min", c.min}, {"max", c.max}}}});
    }
    return {{"axis", qncal::to_string(axis)}, {"iteration", at_iteration}, {"variants", vs}};
  }
};

/// Runs every variant with the same master seed (common random numbers across
/// variants) and ranks the mean best-so-far at `at_iteration`.
inline ComparisonReport compare_configs(const BenchmarkSpec& base, SweepAxis axis, const std::vector<std::string>& variants,
                                        int at_iteration = 30, int resamples = 10000) {
  if (variants.empty()) throw ArgumentError("compare: no variants given");
  ComparisonReport rep;
  rep.axis = axis;
  rep.at_iteration = at_iteration;
  for (std::size_t k = 0; k < variants.size(); ++k) {
    BenchmarkSpec s = base;
    s.bo = apply_variant(base.bo, axis, variants[k]);
    VariantResult v;
    v.name = variants[k];
    v.result = run_benchmark(s);
    const auto sample = v.result.best_at(at_iteration);
    if (sample.empty()) throw NumericError("compare: variant '" + v.name + "' has no complete trials");
    double sum = 0.0;
    for (double b : sample) sum += b;
    v.mean_at = sum / sample.size();
    v.interval = bootstrap_mean_interval(sample, derive_seed(base.master_seed, 0xb0075ULL + k), resamples);
    rep.variants.push_back(std::move(v));
  }
  std::vector<std::size_t> order(rep.variants.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return rep.variants[a].mean_at < rep.variants[b].mean_at; });
  for (std::size_t r = 0; r < order.size(); ++r) rep.variants[order[r]].rank = static_cast<int>(r) + 1;
  return rep;
}

}  // namespace qncal
