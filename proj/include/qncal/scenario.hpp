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

// Simulated experiments: a ScenarioParams template plus the physical knobs the
// optimizer turns, each mapped onto one field of the template.

#include "qncal/core.hpp"
#include "qncal/gaussian_optics.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <numbers>
#include <string>
#include <string_view>
#include <vector>

namespace qncal {

enum class KnobTarget {
  stage,         // translation stage position -> overlap = exp(-((x - center) / width)^2)
  waveplate,     // half-waveplate angle in degrees -> eta_u = eta_max cos^2(2 (theta - center))
  eta_u,
  eta_d,
  overlap,
  detuning,      // GHz
  squeezing,
  mean_photons,  // both thermal inputs
};

inline std::string_view to_string(KnobTarget t) {
  switch (t) {
    case KnobTarget::stage: return "stage";
    case KnobTarget::waveplate: return "waveplate";
    case KnobTarget::eta_u: return "eta_u";
    case KnobTarget::eta_d: return "eta_d";
    case KnobTarget::overlap: return "overlap";
    case KnobTarget::detuning: return "detuning";
    case KnobTarget::squeezing: return "squeezing";
    case KnobTarget::mean_photons: return "mean_photons";
  }
  return "?";
}

inline KnobTarget parse_knob_target(std::string_view s) {
  for (KnobTarget t : {KnobTarget::stage, KnobTarget::waveplate, KnobTarget::eta_u, KnobTarget::eta_d,
                       KnobTarget::overlap, KnobTarget::detuning, KnobTarget::squeezing, KnobTarget::mean_photons})
    if (s == to_string(t)) return t;
  throw ArgumentError("unknown knob target '" + std::string(s) + "'");
}

struct Knob {
  std::string name;
  KnobTarget target = KnobTarget::overlap;
  double lower = 0.0;
  double upper = 1.0;
  double center = 0.0;  // stage x0 or waveplate theta0
  double width = 1.0;   // stage only
  double eta_max = 0.8; // waveplate only

  void apply(ScenarioParams& p, double v) const {
    switch (target) {
      case KnobTarget::stage: {
        const double u = (v - center) / width;
        p.overlap = std::exp(-u * u);
        break;
      }
      case KnobTarget::waveplate: {
        const double c = std::cos(2.0 * (v - center) * std::numbers::pi / 180.0);
        p.eta_u = eta_max * c * c;
        break;
      }
      case KnobTarget::eta_u: p.eta_u = v; break;
      case KnobTarget::eta_d: p.eta_d = v; break;
      case KnobTarget::overlap: p.overlap = v; break;
      case KnobTarget::detuning: p.detuning_ghz = v; break;
      case KnobTarget::squeezing: p.squeezing = v; break;
      case KnobTarget::mean_photons: p.mean_photons = p.mean_photons_2 = v; break;
    }
  }
};

struct Scenario {
  std::string name;
  ScenarioParams base;
  std::vector<Knob> knobs;

  Eigen::Index dim() const { return static_cast<Eigen::Index>(knobs.size()); }

  Box domain() const {
    Vector lo(dim()), hi(dim());
    for (Eigen::Index i = 0; i < dim(); ++i) {
      lo[i] = knobs[i].lower;
      hi[i] = knobs[i].upper;
    }
    return Box(lo, hi);
  }

  /// Scenario parameters at physical setting x.
  ScenarioParams at(const Vector& x) const {
    if (x.size() != dim()) throw ArgumentError("scenario '" + name + "': setting has wrong dimension");
    ScenarioParams p = base;
    for (Eigen::Index i = 0; i < dim(); ++i) knobs[i].apply(p, x[i]);
    return p;
  }

  double g2(const Vector& x) const { return g2_objective(at(x)); }
};

// Built-in experiments. In 2D the overlap dip spans about a fifth of the stage
// range and the waveplate reaches full extinction at 45 deg.

/// Degenerate source: stage position [mm] x half-waveplate angle [deg].
inline Scenario scenario_sv2d() {
  Scenario s;
  s.name = "sv2d";
  s.base.input = InputKind::sv;
  s.base.squeezing = 0.2;
  s.base.eta_u = 0.8;
  s.base.eta_d = 0.8;
  s.knobs.push_back({"stage_mm", KnobTarget::stage, 0.0, 15.0, 7.5, 1.5, 0.8});
  s.knobs.push_back({"waveplate_deg", KnobTarget::waveplate, 0.0, 45.0, 0.0, 1.0, 0.8});
  return s;
}

/// sv2d plus the filter detuning [GHz] as a third knob. The narrower 12 GHz
/// filter lengthens the photons, so the stage dip is 50/12 times wider. The
/// waveplate stops at 25 deg (eta_u >= 0.33): near extinction the detuned
/// two-mode part loses its pair correlations and would dominate the minimum.
inline Scenario scenario_sv3d() {
  Scenario s = scenario_sv2d();
  s.name = "sv3d";
  s.knobs[0].width = 6.25;
  s.knobs[1].upper = 25.0;
  s.base.detuning_ghz = 0.0;
  s.base.filter_sigma_ghz = 5.1;
  s.knobs.push_back({"detuning_ghz", KnobTarget::detuning, 0.0, 6.0});
  return s;
}

/// Two independent thermal inputs: stage offset (overlap exp(-x^2)) x eta_u.
inline Scenario scenario_thermal2d() {
  Scenario s;
  s.name = "thermal2d";
  s.base.input = InputKind::thermal;
  s.base.mean_photons = 0.04;
  s.base.mean_photons_2 = 0.04;
  s.base.eta_u = 0.2;
  s.base.eta_d = 0.2;
  s.knobs.push_back({"stage_offset", KnobTarget::stage, 0.0, 3.0, 0.0, 1.0});
  s.knobs.push_back({"eta_u", KnobTarget::eta_u, 0.0, 1.0});
  return s;
}

// ---------------------------------------------------------------------------
// JSON

inline nlohmann::json to_json(const ScenarioParams& p) {
  nlohmann::json j{{"input", to_string(p.input)},
                   {"squeezing", p.squeezing},
                   {"mean_photons", p.mean_photons},
                   {"mean_photons_2", p.mean_photons_2},
                   {"eta_u", p.eta_u},
                   {"eta_d", p.eta_d},
                   {"overlap", p.overlap},
                   {"phase_grid", p.phase_grid},
                   {"filter_sigma_ghz", p.filter_sigma_ghz}};
  if (p.spectral_overlap) j["spectral_overlap"] = *p.spectral_overlap;
  if (p.detuning_ghz) j["detuning_ghz"] = *p.detuning_ghz;
  if (p.nondegenerate_squeezing) j["nondegenerate_squeezing"] = *p.nondegenerate_squeezing;
  return j;
}

inline ScenarioParams scenario_params_from_json(const nlohmann::json& j) {
  ScenarioParams p;
  if (j.contains("input")) p.input = parse_input_kind(j.at("input").get<std::string>());
  p.squeezing = j.value("squeezing", p.squeezing);
  p.mean_photons = j.value("mean_photons", p.mean_photons);
  p.mean_photons_2 = j.value("mean_photons_2", p.mean_photons);
  p.eta_u = j.value("eta_u", p.eta_u);
  p.eta_d = j.value("eta_d", p.eta_d);
  p.overlap = j.value("overlap", p.overlap);
  p.phase_grid = j.value("phase_grid", p.phase_grid);
  p.filter_sigma_ghz = j.value("filter_sigma_ghz", p.filter_sigma_ghz);
  if (j.contains("spectral_overlap")) p.spectral_overlap = j.at("spectral_overlap").get<double>();
  if (j.contains("detuning_ghz")) p.detuning_ghz = j.at("detuning_ghz").get<double>();
  if (j.contains("nondegenerate_squeezing")) p.nondegenerate_squeezing = j.at("nondegenerate_squeezing").get<double>();
  p.validate();
  return p;
}

inline nlohmann::json to_json(const Scenario& s) {
  nlohmann::json knobs = nlohmann::json::array();
  for (const Knob& k : s.knobs)
    knobs.push_back({{"name", k.name},
                     {"target", to_string(k.target)},
                     {"lower", k.lower},
                     {"upper", k.upper},
                     {"center", k.center},
                     {"width", k.width},
                     {"eta_max", k.eta_max}});
  return {{"name", s.name}, {"params", to_json(s.base)}, {"knobs", knobs}};
}

inline Scenario scenario_from_json(const nlohmann::json& j) {
  try {
    Scenario s;
    s.name = j.value("name", std::string("custom"));
    s.base = scenario_params_from_json(j.value("params", nlohmann::json::object()));
    for (const auto& kj : j.at("knobs")) {
      Knob k;
      k.name = kj.value("name", std::string("knob") + std::to_string(s.knobs.size() + 1));
      k.target = parse_knob_target(kj.at("target").get<std::string>());
      k.lower = kj.at("lower").get<double>();
      k.upper = kj.at("upper").get<double>();
      k.center = kj.value("center", 0.0);
      k.width = kj.value("width", 1.0);
      k.eta_max = kj.value("eta_max", 0.8);
      if (k.target == KnobTarget::stage && !(k.width > 0.0)) throw ArgumentError("knob '" + k.name + "': width must be > 0");
      s.knobs.push_back(std::move(k));
    }
    if (s.knobs.empty()) throw ArgumentError("scenario: at least one knob is required");
    s.domain();  // validates bounds
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ArgumentError(std::string("scenario file: ") + e.what());
  }
}

inline Scenario load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ArgumentError("cannot open scenario file '" + path + "'");
  try {
    return scenario_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw ArgumentError("scenario file '" + path + "': " + e.what());
  }
}

/// Resolves "sv2d", "sv3d", "thermal2d" or "custom:<file>".
inline Scenario scenario_by_name(std::string_view name) {
  if (name == "sv2d") return scenario_sv2d();
  if (name == "sv3d") return scenario_sv3d();
  if (name == "thermal2d") return scenario_thermal2d();
  if (name.starts_with("custom:")) return load_scenario_file(std::string(name.substr(7)));
  throw ArgumentError("unknown scenario '" + std::string(name) + "'");
}

}  // namespace qncal
