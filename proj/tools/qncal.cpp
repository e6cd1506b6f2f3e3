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

// qncal: command-line front end.
//
//   qncal simulate    tabulate a scenario on a grid (CSV)
//   qncal optimize    one Bayesian-optimization run (JSON lines)
//   qncal benchmark   repeated seeded runs and a convergence curve
//   qncal compare     kernel / acquisition / design ablation report
//   qncal gd-baseline finite-difference gradient-descent run
//
// Exit codes: 0 ok, 1 I/O or other failure, 2 bad arguments,
// 3 objective or protocol failure, 4 numeric failure.

#include "qncal/qncal.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace {

using namespace qncal;

constexpr int kExitIo = 1;
constexpr int kExitArgs = 2;
constexpr int kExitObjective = 3;
constexpr int kExitNumeric = 4;

struct ObjectiveFlags {
  std::string objective = "sim:sv2d";
  std::string noise = "none";
  double t_int = 60.0;
  std::string domain;  // "lo:hi,lo:hi" for exec objectives
};

struct BoFlags {
  int budget = 30;
  std::optional<int> init;
  std::string design = "lhs";
  std::string kernel = "matern52";
  std::string acq = "lcb";
  double beta = 2.0;
  int candidates = 4096;
  bool exclude_visited = false;
};

struct Common {
  std::uint64_t seed = 0;
  std::string out;
  bool timing = false;
  int threads = 0;
};

Box parse_domain(const std::string& s) {
  std::vector<double> lo, hi;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto c = item.find(':');
    if (c == std::string::npos) throw ArgumentError("domain '" + s + "': expected lo:hi,lo:hi,...");
    try {
      lo.push_back(std::stod(item.substr(0, c)));
      hi.push_back(std::stod(item.substr(c + 1)));
    } catch (const std::exception&) {
      throw ArgumentError("domain '" + s + "': bad number");
    }
  }
  if (lo.empty()) throw ArgumentError("domain is empty");
  return Box(Eigen::Map<Vector>(lo.data(), lo.size()), Eigen::Map<Vector>(hi.data(), hi.size()));
}

std::optional<CountConfig> parse_noise(const std::string& noise, double t_int) {
  if (noise == "none") return std::nullopt;
  if (noise != "poisson") throw ArgumentError("noise must be none or poisson");
  CountConfig c;
  c.integration_time = t_int;
  c.validate();
  return c;
}

ObjectiveSpec objective_spec(const ObjectiveFlags& f) {
  ObjectiveSpec s;
  const auto colon = f.objective.find(':');
  if (colon == std::string::npos) throw ArgumentError("objective must be sim:<scenario>, grid:<csv> or exec:<cmd>");
  const std::string kind = f.objective.substr(0, colon), arg = f.objective.substr(colon + 1);
  if (kind == "sim") {
    s.source = ObjectiveSource::simulator;
    s.scenario = scenario_by_name(arg);
    s.noise = parse_noise(f.noise, f.t_int);
  } else if (kind == "grid") {
    s.source = ObjectiveSource::grid;
    s.path = arg;
  } else if (kind == "exec") {
    s.source = ObjectiveSource::external;
    s.command = arg;
    if (f.domain.empty()) throw ArgumentError("exec objectives need --domain lo:hi,...");
  } else {
    throw ArgumentError("unknown objective kind '" + kind + "'");
  }
  if (!f.domain.empty()) s.domain = parse_domain(f.domain);
  return s;
}

BoConfig bo_config(const BoFlags& f) {
  BoConfig c;
  c.n_max = f.budget;
  c.n_init = f.init;
  c.design.scheme = parse_design_scheme(f.design);
  c.kernel_family = parse_kernel_family(f.kernel);
  c.acquisition.kind = parse_acquisition_kind(f.acq);
  c.acquisition.beta = f.beta;
  c.acquisition.candidate_count = f.candidates;
  c.acquisition.exclude_visited = f.exclude_visited;
  return c;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open '" + path + "' for writing");
  return out;
}

void add_objective_flags(CLI::App* app, ObjectiveFlags& f) {
  app->add_option("--objective", f.objective, "sim:<scenario> | grid:<csv> | exec:<cmd>");
  app->add_option("--noise", f.noise, "none | poisson (simulator objectives)");
  app->add_option("--t-int", f.t_int, "integration time per setting [s]");
  app->add_option("--domain", f.domain, "physical bounds lo:hi,... (required for exec)");
}

void add_bo_flags(CLI::App* app, BoFlags& f) {
  app->add_option("--budget", f.budget, "total evaluations n_max");
  app->add_option("--init", f.init, "initial design size (default 12 in 2D, 15 in 3D)");
  app->add_option("--design", f.design, "lhs | maximin | sobol | halton | random");
  app->add_option("--kernel", f.kernel, "matern52 | rbf | periodic");
  app->add_option("--acq", f.acq, "lcb | ei | pi");
  app->add_option("--beta", f.beta, "LCB trade-off");
  app->add_option("--candidates", f.candidates, "Sobol candidates per proposal");
  app->add_flag("--exclude-visited", f.exclude_visited, "never re-propose an observed grid node");
}

void add_common(CLI::App* app, Common& c, bool threads) {
  app->add_option("--seed", c.seed, "seed (master seed for repeated runs)");
  app->add_flag("--timing", c.timing, "record wall-clock times (output is then not reproducible)");
  if (threads) app->add_option("--threads", c.threads, "worker threads (0 = all cores)");
}

/// Expands `--config file.json` into flags placed before the user's own, so
/// that explicit flags win (last value is taken).
std::vector<std::string> expand_config(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  std::vector<std::string> injected, rest;
  for (std::size_t i = 0; i < args.size(); ++i) {
    std::string path;
    if (args[i] == "--config" && i + 1 < args.size()) {
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
      continue;
    }
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open config file '" + path + "'");
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
      throw ArgumentError("config file '" + path + "': " + e.what());
    }
    if (!j.is_object()) throw ArgumentError("config file must hold a JSON object");
    for (const auto& [key, value] : j.items()) {
      const std::string flag = "--" + key;
      if (value.is_boolean()) {
        if (value.get<bool>()) injected.push_back(flag);
      } else if (value.is_string()) {
        injected.push_back(flag);
        injected.push_back(value.get<std::string>());
      } else if (value.is_number()) {
        injected.push_back(flag);
        injected.push_back(value.dump());
      } else if (value.is_array()) {
        std::string joined;
        for (const auto& v : value) joined += (joined.empty() ? "" : ",") + (v.is_string() ? v.get<std::string>() : v.dump());
        injected.push_back(flag);
        injected.push_back(joined);
      } else {
        throw ArgumentError("config key '" + key + "' has an unsupported value");
      }
    }
  }
  // Keep the subcommand first.
  std::vector<std::string> out;
  std::size_t k = 0;
  if (!rest.empty() && rest[0].rfind("-", 0) != 0) out.push_back(rest[k++]);
  out.insert(out.end(), injected.begin(), injected.end());
  out.insert(out.end(), rest.begin() + static_cast<std::ptrdiff_t>(k), rest.end());
  std::reverse(out.begin(), out.end());  // CLI11 parses a reversed vector
  return out;
}

void print_record_summary(const RunRecord& r) {
  if (r.entries.empty()) return;
  std::size_t arg = 0;
  for (std::size_t i = 0; i < r.entries.size(); ++i)
    if (r.entries[i].y < r.entries[arg].y) arg = i;
  std::cout << "evaluations " << r.entries.size() << (r.complete ? "" : " (incomplete)") << "\n";
  std::cout << "best y " << Grid::format_double(r.entries[arg].y) << " at x =";
  for (Eigen::Index d = 0; d < r.entries[arg].x.size(); ++d) std::cout << ' ' << Grid::format_double(r.entries[arg].x[d]);
  std::cout << " (iteration " << r.entries[arg].iter << ")\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"qncal: Bayesian-optimization calibration of two-photon interference"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.set_help_all_flag("--help-all");
  std::string config_placeholder;
  app.add_option("--config", config_placeholder, "JSON file supplying any flag; explicit flags override it");

  // simulate
  auto* sim = app.add_subcommand("simulate", "tabulate a scenario objective on a rectangular grid");
  std::string sim_scenario = "sv2d", sim_grid = "35x10", sim_noise = "none";
  double sim_t = 60.0;
  Common sim_c;
  sim->add_option("--scenario", sim_scenario, "sv2d | sv3d | thermal2d | custom:<file>");
  sim->add_option("--grid", sim_grid, "nodes per axis, e.g. 35x10");
  sim->add_option("--noise", sim_noise, "none | poisson");
  sim->add_option("--t-int", sim_t, "integration time per node [s]");
  sim->add_option("--out", sim_c.out, "output CSV")->required();
  sim->add_option("--seed", sim_c.seed, "noise seed");

  // optimize
  auto* opt = app.add_subcommand("optimize", "one Bayesian-optimization run");
  ObjectiveFlags opt_o;
  BoFlags opt_b;
  Common opt_c;
  add_objective_flags(opt, opt_o);
  add_bo_flags(opt, opt_b);
  add_common(opt, opt_c, false);
  opt->add_option("--out", opt_c.out, "run record (JSON lines)");

  // benchmark
  auto* bench = app.add_subcommand("benchmark", "repeated seeded runs and their convergence curve");
  ObjectiveFlags bench_o;
  BoFlags bench_b;
  Common bench_c;
  int trials = 100;
  std::string curve_out;
  add_objective_flags(bench, bench_o);
  add_bo_flags(bench, bench_b);
  add_common(bench, bench_c, true);
  bench->add_option("--trials", trials, "number of independent runs");
  bench->add_option("--curve-out", curve_out, "convergence curve CSV");
  bench->add_option("--out", bench_c.out, "all run records (JSON lines)");

  // compare
  auto* cmp = app.add_subcommand("compare", "ablation over kernel, acquisition or design");
  ObjectiveFlags cmp_o;
  BoFlags cmp_b;
  Common cmp_c;
  int cmp_trials = 100, cmp_at = 30, cmp_resamples = 10000;
  std::string axis = "kernel", variants, report_out;
  add_objective_flags(cmp, cmp_o);
  add_bo_flags(cmp, cmp_b);
  add_common(cmp, cmp_c, true);
  cmp->add_option("--trials", cmp_trials, "runs per variant");
  cmp->add_option("--axis", axis, "kernel | acquisition | design");
  cmp->add_option("--variants", variants, "comma-separated variants (default: all for the axis)");
  cmp->add_option("--at", cmp_at, "iteration at which variants are ranked");
  cmp->add_option("--resamples", cmp_resamples, "bootstrap resamples");
  cmp->add_option("--report-out", report_out, "report JSON")->required();

  // gd-baseline
  auto* gd = app.add_subcommand("gd-baseline", "finite-difference gradient descent");
  ObjectiveFlags gd_o;
  Common gd_c;
  double step = 0.01, fd_step = 1e-3;
  int gd_budget = 30;
  add_objective_flags(gd, gd_o);
  add_common(gd, gd_c, false);
  gd->add_option("--step", step, "step size in normalized coordinates per unit gradient");
  gd->add_option("--fd-step", fd_step, "finite-difference step (normalized)");
  gd->add_option("--budget", gd_budget, "maximum objective evaluations");
  gd->add_option("--out", gd_c.out, "run record (JSON lines)");

  try {
    std::vector<std::string> args = expand_config(argc, argv);
    try {
      app.parse(args);
    } catch (const CLI::ParseError& e) {
      return app.exit(e) == 0 ? 0 : kExitArgs;
    }

    if (*sim) {
      const Scenario s = scenario_by_name(sim_scenario);
      std::optional<CountConfig> noise = parse_noise(sim_noise, sim_t);
      if (noise) noise->seed = sim_c.seed;
      const Grid g = generate_baseline(s, parse_grid_counts(sim_grid), noise);
      g.write_csv(sim_c.out);
      Eigen::Index i = 0;
      const double m = g.values().minCoeff(&i);
      std::cout << "wrote " << g.size() << " nodes to " << sim_c.out << "; minimum " << Grid::format_double(m) << " at x =";
      for (Eigen::Index d = 0; d < g.dim(); ++d) std::cout << ' ' << Grid::format_double(g.nodes()(i, d));
      std::cout << "\n";
    } else if (*opt) {
      ObjectiveSpec os = objective_spec(opt_o);
      if (os.noise) os.noise->seed = derive_seed(opt_c.seed, 0x6e6f697365ULL);
      const Objective obj = make_objective(os);
      BoConfig c = bo_config(opt_b);
      c.seed = opt_c.seed;
      c.record_wall_time = opt_c.timing;
      const RunRecord r = run_bo(obj, c);
      if (!opt_c.out.empty()) {
        auto out = open_out(opt_c.out);
        write_jsonl(out, r);
      }
      print_record_summary(r);
      if (!r.complete) {
        std::cerr << "qncal: run aborted: " << r.error << "\n";
        return kExitObjective;
      }
    } else if (*bench) {
      BenchmarkSpec spec;
      spec.objective = objective_spec(bench_o);
      spec.bo = bo_config(bench_b);
      spec.bo.record_wall_time = bench_c.timing;
      spec.n_trials = trials;
      spec.master_seed = bench_c.seed;
      spec.threads = bench_c.threads;
      const BenchmarkResult res = run_benchmark(spec);
      if (!curve_out.empty()) {
        auto out = open_out(curve_out);
        res.curve.write_csv(out);
      }
      if (!bench_c.out.empty()) {
        auto out = open_out(bench_c.out);
        res.write_jsonl(out);
      }
      std::cout << "trials " << res.curve.trials << " (failed " << res.curve.failures << ")\n";
      if (res.curve.size() > 0)
        std::cout << "mean best after " << res.curve.size() << " evaluations " << Grid::format_double(res.curve.mean.back())
                  << " (std " << Grid::format_double(res.curve.stddev.back()) << ")\n";
      if (res.curve.trials == 0) return kExitNumeric;
    } else if (*cmp) {
      BenchmarkSpec spec;
      spec.objective = objective_spec(cmp_o);
      spec.bo = bo_config(cmp_b);
      spec.n_trials = cmp_trials;
      spec.master_seed = cmp_c.seed;
      spec.threads = cmp_c.threads;
      const SweepAxis ax = parse_sweep_axis(axis);
      std::vector<std::string> vs;
      if (variants.empty()) {
        switch (ax) {
          case SweepAxis::kernel: vs = {"matern52", "rbf", "periodic"}; break;
          case SweepAxis::acquisition: vs = {"lcb", "ei", "pi"}; break;
          case SweepAxis::design: vs = {"lhs", "maximin", "sobol", "halton", "random"}; break;
        }
      } else {
        std::stringstream ss(variants);
        for (std::string v; std::getline(ss, v, ',');)
          if (!v.empty()) vs.push_back(v);
      }
      const ComparisonReport rep = compare_configs(spec, ax, vs, cmp_at, cmp_resamples);
      auto out = open_out(report_out);
      out << rep.to_json().dump(2) << '\n';
      for (const auto& v : rep.variants)
        std::cout << v.rank << ". " << v.name << "  mean " << Grid::format_double(v.mean_at) << "  90% CI ["
                  << Grid::format_double(v.interval.lo) << ", " << Grid::format_double(v.interval.hi) << "]\n";
    } else if (*gd) {
      ObjectiveSpec os = objective_spec(gd_o);
      if (os.noise) os.noise->seed = derive_seed(gd_c.seed, 0x6e6f697365ULL);
      const Objective obj = make_objective(os);
      GdConfig c;
      c.step_size = step;
      c.fd_step = fd_step;
      c.max_evaluations = gd_budget;
      c.max_iterations = gd_budget;
      c.seed = gd_c.seed;
      const RunRecord r = gradient_descent_baseline(obj, c);
      if (!gd_c.out.empty()) {
        auto out = open_out(gd_c.out);
        write_jsonl(out, r);
      }
      print_record_summary(r);
      if (!r.complete) {
        std::cerr << "qncal: run aborted: " << r.error << "\n";
        return kExitObjective;
      }
    }
  } catch (const ArgumentError& e) {
    std::cerr << "qncal: " << e.what() << "\n";
    return kExitArgs;
  } catch (const ObjectiveError& e) {
    std::cerr << "qncal: " << e.what() << "\n";
    return kExitObjective;
  } catch (const NumericError& e) {
    std::cerr << "qncal: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "qncal: " << e.what() << "\n";
    return kExitArgs;
  } catch (const std::exception& e) {
    std::cerr << "qncal: " << e.what() << "\n";
    return kExitIo;
  }
  return 0;
}
