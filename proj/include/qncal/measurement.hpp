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

// Shot-noise counting model, the g2 estimator, tabulated grids and the
// objective handles consumed by the optimizer.

#include "qncal/core.hpp"
#include "qncal/detail/subprocess.hpp"
#include "qncal/gaussian_optics.hpp"
#include "qncal/scenario.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

namespace qncal {

struct CountConfig {
  double integration_time = 60.0;     // T [s]
  double coincidence_window = 2e-9;   // delta tau [s]
  std::optional<double> window_rate;  // trials per second; unset means 1 / delta tau
  std::uint64_t seed = 0;

  double rate() const { return window_rate ? *window_rate : 1.0 / coincidence_window; }
  double windows() const { return rate() * integration_time; }

  void validate() const {
    if (!(integration_time > 0.0)) throw ArgumentError("counts: integration time must be > 0");
    if (!(coincidence_window > 0.0)) throw ArgumentError("counts: coincidence window must be > 0");
    if (window_rate && !(*window_rate > 0.0)) throw ArgumentError("counts: window rate must be > 0");
  }
};

struct Counts {
  std::int64_t singles_1 = 0;
  std::int64_t singles_2 = 0;
  std::int64_t coincidences = 0;
};

namespace detail {
inline std::int64_t poisson(double mean, Rng& rng) {
  if (!(mean > 0.0)) return 0;
  return std::poisson_distribution<std::int64_t>(mean)(rng);
}
}  // namespace detail

/// Independent Poisson draws of both singles and the coincidences over
/// N_w = window_rate * T trials.
inline Counts sample_counts(const ClickProbabilities& p, const CountConfig& config, Rng& rng) {
  config.validate();
  const double n = config.windows();
  Counts c;
  c.singles_1 = detail::poisson(p.p_d1 * n, rng);
  c.singles_2 = detail::poisson(p.p_d2 * n, rng);
  c.coincidences = detail::poisson(p.p_coinc * n, rng);
  return c;
}

/// g2(0) = C12 T / (S1 S2 delta tau).
inline double g2_estimate(const Counts& c, const CountConfig& config) {
  config.validate();
  if (c.singles_1 <= 0 || c.singles_2 <= 0) throw InsufficientCountsError("g2 estimate: a detector recorded no singles");
  return static_cast<double>(c.coincidences) * config.integration_time /
         (static_cast<double>(c.singles_1) * static_cast<double>(c.singles_2) * config.coincidence_window);
}

// ---------------------------------------------------------------------------
// Tabulated grids

/// Objective values on a complete rectangular grid, CSV header x1,...,xD,y.
class Grid {
 public:
  Grid() = default;

  /// Rows of `nodes` are physical settings; validates rectangular completeness.
  Grid(Matrix nodes, Vector values) : nodes_(std::move(nodes)), values_(std::move(values)) { index(); }

  const Matrix& nodes() const { return nodes_; }
  const Vector& values() const { return values_; }
  Eigen::Index dim() const { return nodes_.cols(); }
  Eigen::Index size() const { return nodes_.rows(); }
  const std::vector<std::vector<double>>& axes() const { return axes_; }

  Box domain() const {
    Vector lo(dim()), hi(dim());
    for (Eigen::Index d = 0; d < dim(); ++d) {
      lo[d] = axes_[d].front();
      hi[d] = axes_[d].back();
    }
    return Box(lo, hi);
  }

  /// Row index of the node nearest to x (per-axis nearest coordinate).
  Eigen::Index nearest(const Vector& x) const {
    if (x.size() != dim()) throw ArgumentError("grid lookup: dimension mismatch");
    std::vector<int> key(dim());
    for (Eigen::Index d = 0; d < dim(); ++d) {
      const auto& ax = axes_[d];
      auto it = std::lower_bound(ax.begin(), ax.end(), x[d]);
      std::size_t k = static_cast<std::size_t>(it - ax.begin());
      if (k == ax.size()) {
        k = ax.size() - 1;
      } else if (k > 0 && (x[d] - ax[k - 1]) <= (ax[k] - x[d])) {
        --k;
      }
      key[d] = static_cast<int>(k);
    }
    return lookup_.at(key);
  }

  double value_at(const Vector& x) const { return values_[nearest(x)]; }

  void write_csv(std::ostream& out) const {
    for (Eigen::Index d = 0; d < dim(); ++d) out << 'x' << (d + 1) << ',';
    out << "y\n";
    for (Eigen::Index i = 0; i < size(); ++i) {
      for (Eigen::Index d = 0; d < dim(); ++d) out << format_double(nodes_(i, d)) << ',';
      out << format_double(values_[i]) << '\n';
    }
  }

  void write_csv(const std::string& path) const {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write grid file '" + path + "'");
    write_csv(out);
    if (!out) throw Error("write failed for grid file '" + path + "'");
  }

  static Grid read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ObjectiveError("grid file: empty");
    const auto header = split(line);
    if (header.size() < 2 || header.back() != "y") throw ObjectiveError("grid file: header must be x1,...,xD,y");
    for (std::size_t d = 0; d + 1 < header.size(); ++d)
      if (header[d] != "x" + std::to_string(d + 1)) throw ObjectiveError("grid file: header must be x1,...,xD,y");
    const std::size_t D = header.size() - 1;
    std::vector<std::vector<double>> rows;
    int lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty() || line == "\r") continue;
      const auto fields = split(line);
      if (fields.size() != D + 1) throw ObjectiveError("grid file: wrong field count on line " + std::to_string(lineno));
      std::vector<double> row;
      for (const auto& f : fields) row.push_back(parse_double(f, lineno));
      rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ObjectiveError("grid file: no data rows");
    Matrix nodes(rows.size(), D);
    Vector values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
      for (std::size_t d = 0; d < D; ++d) nodes(i, d) = rows[i][d];
      values[i] = rows[i][D];
    }
    try {
      return Grid(std::move(nodes), std::move(values));
    } catch (const ArgumentError& e) {
      throw ObjectiveError(std::string("grid file: ") + e.what());
    }
  }

  static Grid read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ObjectiveError("cannot open grid file '" + path + "'");
    return read_csv(in);
  }

  static std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
  }

 private:
  void index() {
    if (nodes_.rows() != values_.size() || nodes_.rows() == 0) throw ArgumentError("grid: nodes/values size mismatch");
    const Eigen::Index D = nodes_.cols();
    axes_.assign(D, {});
    for (Eigen::Index d = 0; d < D; ++d) {
      std::vector<double> ax(nodes_.col(d).data(), nodes_.col(d).data() + nodes_.rows());
      std::sort(ax.begin(), ax.end());
      ax.erase(std::unique(ax.begin(), ax.end()), ax.end());
      axes_[d] = std::move(ax);
    }
    std::size_t expected = 1;
    for (const auto& ax : axes_) expected *= ax.size();
    if (expected != static_cast<std::size_t>(nodes_.rows()))
      throw ArgumentError("grid is not a complete rectangular grid (" + std::to_string(nodes_.rows()) + " rows, " +
                          std::to_string(expected) + " expected)");
    for (Eigen::Index i = 0; i < nodes_.rows(); ++i) {
      std::vector<int> key(D);
      for (Eigen::Index d = 0; d < D; ++d)
        key[d] = static_cast<int>(std::lower_bound(axes_[d].begin(), axes_[d].end(), nodes_(i, d)) - axes_[d].begin());
      if (!lookup_.emplace(std::move(key), i).second) throw ArgumentError("grid has a duplicated node");
    }
    if (axes_.size() && std::any_of(axes_.begin(), axes_.end(), [](const auto& a) { return a.size() < 2; }))
      throw ArgumentError("grid needs at least two nodes per axis");
  }

  static std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
      if (ch == ',') {
        out.push_back(cur);
        cur.clear();
      } else if (ch != '\r' && ch != ' ') {
        cur.push_back(ch);
      }
    }
    out.push_back(cur);
    return out;
  }

  static double parse_double(const std::string& s, int lineno) {
    double v = 0.0;
    auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v))
      throw ObjectiveError("grid file: bad number '" + s + "' on line " + std::to_string(lineno));
    return v;
  }

  Matrix nodes_;
  Vector values_;
  std::vector<std::vector<double>> axes_;
  std::map<std::vector<int>, Eigen::Index> lookup_;
};

// ---------------------------------------------------------------------------
// Objective handles

/// A black-box objective in physical units. Evaluation may throw
/// ObjectiveError. Grid-backed handles expose their nodes as the candidate set.
struct Objective {
  std::function<double(const Vector&)> evaluate;
  Box domain;
  std::optional<Matrix> nodes;
  std::string description;

  double operator()(const Vector& x) const { return evaluate(x); }
};

enum class ObjectiveSource { simulator, grid, external };

struct ObjectiveSpec {
  ObjectiveSource source = ObjectiveSource::simulator;
  Scenario scenario;                 // simulator
  std::string path;                  // grid
  std::string command;               // external
  std::optional<Box> domain;         // external (required); grid/simulator (optional override)
  std::optional<CountConfig> noise;  // simulator only: Poisson counts
};

/// g2 from one noisy counting run; a run with empty singles is repeated once
/// with twice the integration time before giving up.
inline double noisy_g2(const ClickProbabilities& p, const CountConfig& config, Rng& rng) {
  Counts c = sample_counts(p, config, rng);
  if (c.singles_1 > 0 && c.singles_2 > 0) return g2_estimate(c, config);
  CountConfig longer = config;
  longer.integration_time *= 2.0;
  c = sample_counts(p, longer, rng);
  return g2_estimate(c, longer);
}

inline Objective simulator_objective(const Scenario& scenario, std::optional<CountConfig> noise = std::nullopt) {
  Objective o;
  o.domain = scenario.domain();
  if (noise) {
    noise->validate();
    auto rng = std::make_shared<Rng>(noise->seed);
    o.evaluate = [scenario, cfg = *noise, rng](const Vector& x) {
      return noisy_g2(blended_probabilities(scenario.at(x)), cfg, *rng);
    };
    o.description = "simulator:" + scenario.name + " (poisson, T=" + Grid::format_double(noise->integration_time) + " s)";
  } else {
    o.evaluate = [scenario](const Vector& x) { return scenario.g2(x); };
    o.description = "simulator:" + scenario.name;
  }
  return o;
}

inline Objective grid_objective(Grid grid) {
  Objective o;
  o.domain = grid.domain();
  o.nodes = grid.nodes();
  auto g = std::make_shared<const Grid>(std::move(grid));
  o.evaluate = [g](const Vector& x) { return g->value_at(x); };
  o.description = "grid";
  return o;
}

/// Speaks the one-line JSON protocol: {"x":[...]} out, {"y":<number>} back.
inline Objective external_objective(const std::string& command, const Box& domain) {
  Objective o;
  o.domain = domain;
  auto proc = std::make_shared<detail::LineProcess>(command);
  o.evaluate = [proc](const Vector& x) {
    nlohmann::json req;
    req["x"] = std::vector<double>(x.data(), x.data() + x.size());
    proc->write_line(req.dump());
    const std::string line = proc->read_line();
    nlohmann::json reply;
    try {
      reply = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error&) {
      throw ProtocolError("external objective: reply is not JSON: '" + line + "'");
    }
    if (!reply.is_object() || !reply.contains("y") || !reply["y"].is_number())
      throw ProtocolError("external objective: reply lacks a numeric \"y\": '" + line + "'");
    const double y = reply["y"].get<double>();
    if (!std::isfinite(y)) throw ProtocolError("external objective: non-finite reply");
    return y;
  };
  o.description = "exec:" + command;
  return o;
}

inline Objective make_objective(const ObjectiveSpec& spec) {
  Objective o;
  switch (spec.source) {
    case ObjectiveSource::simulator: o = simulator_objective(spec.scenario, spec.noise); break;
    case ObjectiveSource::grid: o = grid_objective(Grid::read_csv(spec.path)); break;
    case ObjectiveSource::external:
      if (!spec.domain) throw ArgumentError("external objective needs an explicit domain");
      o = external_objective(spec.command, *spec.domain);
      break;
  }
  if (spec.domain) {
    if (spec.domain->dim() != o.domain.dim()) throw ArgumentError("objective domain dimension does not match");
    o.domain = *spec.domain;
  }
  return o;
}

}  // namespace qncal
