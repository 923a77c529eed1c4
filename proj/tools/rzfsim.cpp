// Copyright 2026 The rzf-coop Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Command-line driver: simulate, alpha-opt, bit-alloc, validate.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "rzf/rzf.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw rzf::Error("cannot open config " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw rzf::Error("malformed JSON in " + p.string() + ": " + e.what());
  }
}

/// A config is either a scenario document or an object with a "scenario" key.
std::optional<json> scenario_part(const json& cfg) {
  if (cfg.contains("scenario")) return std::optional<json>(std::in_place, cfg.at("scenario"));
  if (cfg.contains("M")) return std::optional<json>(std::in_place, cfg);
  return std::nullopt;
}

rzf::Scenario load_scenario(const fs::path& path) {
  const json cfg = read_json(path);
  const auto sc = scenario_part(cfg);
  if (!sc) throw rzf::InvalidScenario("config has no scenario (expected keys M, N, K or a 'scenario' object)");
  return rzf::build_scenario(*sc, path.parent_path());
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw rzf::Error("cannot write " + p.string());
  out << text;
}

/// Writes <dir>/<stem>.csv and <dir>/<stem>.manifest.json.
void write_outputs(const std::string& dir, const std::string& stem, const rzf::Table& t, const json& manifest) {
  if (dir.empty()) return;
  fs::create_directories(dir);
  write_text(fs::path(dir) / (stem + ".csv"), t.to_csv());
  write_text(fs::path(dir) / (stem + ".manifest.json"), manifest.dump(2) + "\n");
}

int cmd_simulate(const std::string& config, const std::string& name, std::uint64_t seed, std::size_t trials,
                 const std::string& out, unsigned workers) {
  rzf::ExperimentSpec spec;
  spec.name = name;
  spec.seed = seed;
  spec.trials = trials;
  spec.workers = workers;
  if (!config.empty()) {
    const json cfg = read_json(config);
    spec.base_dir = fs::path(config).parent_path();
    spec.scenario = scenario_part(cfg);
    if (cfg.contains("experiments") && cfg.at("experiments").contains(name)) {
      spec.params = cfg.at("experiments").at(name);
    } else if (cfg.contains("params")) {
      spec.params = cfg.at("params");
    }
  }
  const rzf::ExperimentResult res = rzf::run_experiment(spec);
  fs::create_directories(out);
  const std::string csv = name + ".csv";
  write_text(fs::path(out) / csv, res.table.to_csv());
  write_text(fs::path(out) / (name + ".manifest.json"), rzf::run_manifest(spec, res, csv).dump(2) + "\n");
  write_text(fs::path(out) / (name + ".meta.json"), rzf::run_metadata(res, workers).dump(2) + "\n");
  if (!res.completed) {
    std::cerr << "error: " << res.failure << '\n';
    return 1;
  }
  std::cout << rzf::emit_report({res});
  return 0;
}

int cmd_alpha(const std::string& config, const std::string& method, const std::string& out) {
  const rzf::Scenario s = load_scenario(config);
  rzf::AlphaResult r;
  if (method == "golden") {
    r = rzf::golden_section_alpha(s);
  } else if (method == "prop1") {
    r = rzf::prop1_alpha(s);
  } else {
    r = rzf::closed_form_alpha(s);
  }
  rzf::Table t;
  t.header = {"method", "alpha_opt", "rbar_bits", "bracket_lo", "bracket_hi", "iterations"};
  t.add({rzf::to_string(r.method), rzf::fmt_exact(r.alpha_opt), rzf::fmt(r.objective / std::log(2.0)),
         rzf::fmt_exact(r.bracket.first), rzf::fmt_exact(r.bracket.second), rzf::fmt(r.iterations)});
  std::cout << t.to_csv();
  for (const auto& w : r.warnings) std::cerr << "warning: " << w << '\n';
  json m{{"command", "alpha-opt"}, {"config", config},    {"method", rzf::to_string(r.method)},
         {"alpha_opt", r.alpha_opt}, {"trajectory", r.trajectory}, {"warnings", r.warnings},
         {"csv", "alpha_opt.csv"}};
  write_outputs(out, "alpha_opt", t, m);
  return 0;
}

int cmd_bitalloc(const std::string& config, int budget, const std::string& space, const std::string& out,
                 unsigned workers) {
  const rzf::Scenario s = load_scenario(config);
  rzf::AllocationOptions o;
  o.workers = workers;
  const auto sp = space == "full" ? rzf::SearchSpace::full : rzf::SearchSpace::restricted;
  const rzf::AllocationResult r = rzf::search_allocation(s, budget, sp, o);
  rzf::Table t;
  t.header = {"user", "bs", "bits", "tau2", "rank", "gain"};
  for (int k = 0; k < s.K; ++k) {
    const auto& ord = r.ranking.order[k];
    for (int i = 0; i < s.M; ++i) {
      const int rank = static_cast<int>(std::find(ord.begin(), ord.end(), i) - ord.begin()) + 1;
      t.add({rzf::fmt(k + 1), rzf::fmt(i + 1), rzf::fmt(r.allocation.bits(k, i)),
             rzf::fmt_exact(rzf::tau2_from_bits(r.allocation.bits(k, i), s.N[i])), rzf::fmt(rank),
             rzf::fmt(r.ranking.gains(k, i))});
    }
  }
  std::cout << t.to_csv();
  std::cerr << "sum-rate " << rzf::fmt(r.sum_rate_nats / std::log(2.0)) << " bits/s/Hz at alpha "
            << rzf::fmt(r.alpha) << "; " << r.evaluated << " candidates evaluated (" << r.strategy << ")\n";
  json m{{"command", "bit-alloc"},
         {"config", config},
         {"budget", budget},
         {"space", space},
         {"strategy", r.strategy},
         {"evaluated", r.evaluated},
         {"per_user_space", r.per_user_space},
         {"alpha", r.alpha},
         {"alpha_method", rzf::to_string(r.alpha_method)},
         {"rbar_bits", r.sum_rate_nats / std::log(2.0)},
         {"csv", "bit_alloc.csv"}};
  write_outputs(out, "bit_alloc", t, m);
  return 0;
}

int cmd_validate(const std::string& config, std::size_t trials, std::uint64_t seed, double alpha,
                 const std::string& out, unsigned workers) {
  const rzf::Scenario s = load_scenario(config);
  const double a = alpha > 0.0 ? alpha : rzf::golden_section_alpha(s).alpha_opt;
  rzf::ResidualOptions o;
  o.workers = workers;
  const rzf::ResidualReport r = rzf::validate_appendix_terms(s, a, trials, seed, o);
  rzf::Table t;
  t.header = {"term", "alpha", "seed", "trials", "mean", "std_error", "mean_abs", "z", "within_3se"};
  auto row = [&](const char* name, const rzf::TermResidual& x) {
    t.add({name, rzf::fmt_exact(a), std::to_string(seed), rzf::fmt(trials), rzf::fmt(x.mean), rzf::fmt(x.std_error),
           rzf::fmt(x.mean_abs), rzf::fmt(x.std_error > 0 ? x.mean / x.std_error : 0.0), x.within(3.0) ? "1" : "0"});
  };
  row("noise", r.noise);
  row("signal", r.signal);
  row("interference", r.interference);
  row("bilinear_xx", r.bilinear_xx);
  row("bilinear_xv", r.bilinear_xv);
  std::cout << t.to_csv();
  json m{{"command", "validate"}, {"config", config}, {"alpha", a},
         {"seed", seed},          {"trials", trials}, {"csv", "validate.csv"}};
  write_outputs(out, "validate", t, m);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cooperative multi-cell RZF precoding: large-system analysis and Monte-Carlo simulation"};
  app.require_subcommand(1);
  unsigned workers = 0;
  app.add_option("--workers", workers, "worker threads (0: all cores)");

  std::string config, experiment, out, method = "golden", space = "restricted";
  std::uint64_t seed = 0;
  std::size_t trials = 500;
  int budget = 0;
  double alpha = 0.0;

  auto* sim = app.add_subcommand("simulate", "run a named experiment and write CSV + manifest");
  sim->add_option("--config", config, "JSON config (scenario and/or experiment parameters)")->check(CLI::ExistingFile);
  sim->add_option("--experiment", experiment, "experiment name")
      ->required()
      ->check(CLI::IsMember(rzf::experiment_names()));
  sim->add_option("--seed", seed, "master seed");
  sim->add_option("--trials", trials, "Monte-Carlo trials per point")->check(CLI::PositiveNumber);
  sim->add_option("--out", out, "output directory")->required();

  auto* al = app.add_subcommand("alpha-opt", "optimal regularization parameter");
  al->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
  al->add_option("--method", method, "golden|prop1|closed-form")
      ->check(CLI::IsMember({"golden", "prop1", "closed-form"}));
  al->add_option("--out", out, "optional output directory");

  auto* ba = app.add_subcommand("bit-alloc", "feedback bit allocation search");
  ba->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
  ba->add_option("--budget", budget, "bits per user")->required()->check(CLI::NonNegativeNumber);
  ba->add_option("--space", space, "full|restricted")->check(CLI::IsMember({"full", "restricted"}));
  ba->add_option("--out", out, "optional output directory");

  auto* va = app.add_subcommand("validate", "large-system residual report");
  va->add_option("--config", config, "scenario JSON")->required()->check(CLI::ExistingFile);
  va->add_option("--trials", trials, "channel draws")->check(CLI::PositiveNumber);
  va->add_option("--seed", seed, "master seed");
  va->add_option("--alpha", alpha, "regularization (default: golden-section optimum)");
  va->add_option("--out", out, "optional output directory");

  CLI11_PARSE(app, argc, argv);
  try {
    if (*sim) return cmd_simulate(config, experiment, seed, trials, out, workers);
    if (*al) return cmd_alpha(config, method, out);
    if (*ba) return cmd_bitalloc(config, budget, space, out, workers);
    if (*va) return cmd_validate(config, trials, seed, alpha, out, workers);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
