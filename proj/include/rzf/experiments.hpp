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

#ifndef RZF_EXPERIMENTS_HPP
#define RZF_EXPERIMENTS_HPP

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "rzf/bitalloc.hpp"
#include "rzf/common.hpp"
#include "rzf/det_sinr.hpp"
#include "rzf/montecarlo.hpp"
#include "rzf/output.hpp"
#include "rzf/random.hpp"
#include "rzf/regopt.hpp"
#include "rzf/scenario.hpp"

namespace rzf {

using nlohmann::json;

/// One named experiment run. `params` overrides the experiment defaults;
/// `scenario` is required by the generic "scenario" experiment only.
struct ExperimentSpec {
  std::string name;
  json params = json::object();
  std::optional<json> scenario;
  std::filesystem::path base_dir = ".";
  std::uint64_t seed = 0;
  std::size_t trials = 500;
  unsigned workers = 0;
};

struct Check {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct ExperimentResult {
  std::string name;
  Table table;
  std::vector<Check> checks;
  json params = json::object();  // every parameter value actually used
  std::vector<std::string> warnings;
  bool completed = false;
  std::string failure;
  std::size_t power_violations = 0;
  std::size_t mc_realizations = 0;
  double worst_power_deviation = 0.0;
  double wall_seconds = 0.0;
};

namespace detail {

constexpr double kLn2 = std::numbers::ln2;

inline double bits(double nats) { return nats / kLn2; }

/// Reads parameters with defaults and records what was used.
class Params {
 public:
  explicit Params(json in) : in_(std::move(in)) {
    if (!in_.is_object()) throw Error("experiment parameters must be a JSON object");
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    T v = fallback;
    if (in_.contains(key)) {
      try {
        v = in_.at(key).get<T>();
      } catch (const json::exception& e) {
        throw Error("bad value for parameter '" + key + "': " + e.what());
      }
    }
    used_[key] = v;
    return v;
  }

  json get_json(const std::string& key, json fallback) {
    json v = in_.contains(key) ? in_.at(key) : std::move(fallback);
    used_[key] = v;
    return v;
  }

  const json& used() const { return used_; }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (auto it = in_.begin(); it != in_.end(); ++it) {
      if (!used_.contains(it.key())) out.push_back(it.key());
    }
    return out;
  }

 private:
  json in_;
  json used_ = json::object();
};

template <typename T>
void check_grid(const std::vector<T>& g, const std::string& what) {
  if (g.empty()) throw Error("sweep grid '" + what + "' is empty");
  for (std::size_t j = 1; j < g.size(); ++j) {
    if (!(g[j] > g[j - 1])) throw Error("sweep grid '" + what + "' must be strictly increasing");
  }
}

inline std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int j = 0; j < n; ++j) {
    g[j] = n == 1 ? lo : std::exp(std::log(lo) + (std::log(hi) - std::log(lo)) * j / (n - 1));
  }
  return g;
}

/// Identity-times-gain correlations shared by all users.
inline Scenario gain_scenario(int K, const std::vector<int>& N, const std::vector<double>& gains,
                              double rho, const RMatrix& tau2) {
  const int M = static_cast<int>(N.size());
  std::vector<CMatrix> corr;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < M; ++i) corr.push_back(CMatrix::Identity(N[i], N[i]) * gains.at(i));
  }
  return make_scenario(M, N, K, rho, std::move(corr), tau2);
}

/// Random exponential-correlation pattern with per-cell gains. With
/// `user_shared`, every user sees the same T_i at BS i.
inline std::vector<CMatrix> random_pattern(Engine& eng, int K, const std::vector<int>& N,
                                           const std::vector<double>& gains, double r_lo,
                                           double r_hi, bool user_shared) {
  const int M = static_cast<int>(N.size());
  std::vector<CMatrix> corr;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < M; ++i) {
      if (user_shared && k > 0) {
        corr.push_back(corr[static_cast<std::size_t>(i)]);
      } else {
        corr.push_back(exp_correlation(N[i], uniform(eng, r_lo, r_hi), gains.at(i)));
      }
    }
  }
  return corr;
}

struct McPoint {
  double mean_bits = 0.0;
  double se_bits = 0.0;
};

inline McPoint monte_carlo(const Scenario& s, double alpha, std::size_t trials, std::uint64_t seed,
                           unsigned workers, ExperimentResult& res) {
  McOptions o;
  o.workers = workers;
  const ErgodicEstimate e = ergodic_sum_rate(s, alpha, trials, seed, o);
  res.power_violations += e.power_violations;
  res.mc_realizations += e.trials;
  res.worst_power_deviation = std::max(res.worst_power_deviation, e.worst_power_deviation);
  return {bits(e.mean_nats), bits(e.std_error_nats)};
}

/// alpha-bar-opt: closed form where it applies, golden section otherwise.
inline AlphaResult alpha_opt(const Scenario& s, double tol = 1e-6) {
  if (is_homogeneous(s) && has_identity_correlation(s)) return closed_form_alpha(s);
  GoldenOptions g;
  g.tolerance = tol;
  return golden_section_alpha(s, g);
}

inline double alpha_naive(const Scenario& s) {
  const double beta = *std::min_element(s.beta.begin(), s.beta.end());
  return 1.0 / (s.M * s.rho * beta);
}

inline void power_check(ExperimentResult& res) {
  if (res.mc_realizations == 0) return;
  std::ostringstream os;
  os << res.power_violations << " violations over " << res.mc_realizations
     << " realizations; worst deviation " << fmt(res.worst_power_deviation, 3);
  res.checks.push_back({"per-BS power constraint", res.power_violations == 0, os.str()});
}

// --------------------------------------------------------------------------
// fig2: deterministic equivalent vs Monte-Carlo, T = I, five CSIT cases.
// --------------------------------------------------------------------------
inline void run_fig2(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  const int M = p.get("M", 4);
  const int N = p.get("N", 8);
  const int K = p.get("K", 32);
  const auto snr = p.get("snr_db", std::vector<double>{0, 5, 10, 15, 20, 25, 30});
  check_grid(snr, "snr_db");
  const json cases = p.get_json(
      "cases", json::array({json{{"name", "tau2=0"}, {"tau2", 0.0}},
                            json{{"name", "tau2=0.1"}, {"tau2", 0.1}},
                            json{{"name", "tau2=0.2"}, {"tau2", 0.2}},
                            json{{"name", "tau2=0.3"}, {"tau2", 0.3}},
                            json{{"name", "mixed"}, {"tau2", json::array({0.0, 0.1, 0.2, 0.3})}}}));
  const auto policies = p.get("policies", std::vector<std::string>{"opt", "naive"});
  const double rel_tol = p.get("agreement_rel_tol", 0.03);
  const double sigmas = p.get("agreement_sigmas", 3.0);

  res.table.header = {"case", "snr_db", "policy", "alpha", "seed", "trials", "rbar_bits",
                      "mc_bits", "mc_se_bits", "rel_error", "agree"};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    const std::string name = cases[c].at("name").get<std::string>();
    RMatrix tau2(K, M);
    const json& t = cases[c].at("tau2");
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < M; ++i) tau2(k, i) = t.is_array() ? t.at(i).get<double>() : t.get<double>();
    }
    double worst = 0.0;
    bool all_ok = true;
    for (std::size_t j = 0; j < snr.size(); ++j) {
      const Scenario s = gain_scenario(K, std::vector<int>(M, N), std::vector<double>(M, 1.0),
                                       db_to_linear(snr[j]), tau2);
      const std::uint64_t seed = derive_seed(spec.seed, c, j);
      for (const auto& pol : policies) {
        double alpha = 0.0;
        if (pol == "opt") {
          alpha = alpha_opt(s).alpha_opt;
        } else if (pol == "naive") {
          alpha = alpha_naive(s);
        } else {
          throw Error("unknown alpha policy '" + pol + "'");
        }
        const double rbar = bits(det_sum_rate(s, alpha));
        const McPoint mc = monte_carlo(s, alpha, spec.trials, seed, spec.workers, res);
        const double gap = std::abs(mc.mean_bits - rbar);
        const bool ok = gap <= std::max(sigmas * mc.se_bits, rel_tol * rbar);
        if (pol == "opt") {
          all_ok = all_ok && ok;
          worst = std::max(worst, gap / rbar);
        }
        res.table.add({name, fmt(snr[j]), pol, fmt_exact(alpha), std::to_string(seed),
                       fmt(spec.trials), fmt(rbar), fmt(mc.mean_bits), fmt(mc.se_bits),
                       fmt((mc.mean_bits - rbar) / mc.mean_bits), ok ? "1" : "0"});
      }
    }
    if (std::find(policies.begin(), policies.end(), "opt") != policies.end()) {
      res.checks.push_back({"agreement " + name, all_ok,
                            "max relative gap " + fmt(worst, 4) + " at alpha-bar-opt"});
    }
  }
  power_check(res);
}

// --------------------------------------------------------------------------
// fig3: relative error vs dimension, M = 2, K = 2 N1, correlated T.
// --------------------------------------------------------------------------
inline void run_fig3(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  const int M = p.get("M", 2);
  const auto sizes = p.get("N1", std::vector<int>{4, 8, 16, 32});
  check_grid(sizes, "N1");
  const double load = p.get("K_per_N1", 2.0);
  const double snr = p.get("snr_db", 20.0);
  const int draws = p.get("draws", 20);
  const auto cases = p.get("cases", std::vector<std::string>{"perfect", "random"});
  const auto r_range = p.get("r_range", std::vector<double>{0.0, 0.9});
  const auto t_range = p.get("tau2_range", std::vector<double>{0.0, 1.0});
  if (draws < 1) throw Error("draws must be >= 1");

  res.table.header = {"case", "N1", "K", "draw", "alpha", "seed", "trials", "rbar_bits",
                      "mc_bits", "mc_se_bits", "rel_error"};
  for (std::size_t c = 0; c < cases.size(); ++c) {
    if (cases[c] != "perfect" && cases[c] != "random") throw Error("unknown fig3 case '" + cases[c] + "'");
    std::vector<double> mean_abs;
    for (std::size_t j = 0; j < sizes.size(); ++j) {
      const int n1 = sizes[j];
      const int K = static_cast<int>(std::lround(load * n1));
      std::vector<double> errs;
      for (int d = 0; d < draws; ++d) {
        // Pattern, CSIT error and channels come from one seeded stream.
        const std::uint64_t seed = derive_seed(derive_seed(spec.seed, c), j, static_cast<std::uint64_t>(d));
        Engine eng = make_engine(seed);
        const std::vector<int> N(static_cast<std::size_t>(M), n1);
        auto corr = random_pattern(eng, K, N, std::vector<double>(M, 1.0), r_range.at(0), r_range.at(1), false);
        RMatrix tau2 = RMatrix::Zero(K, M);
        if (cases[c] == "random") {
          for (int k = 0; k < K; ++k) {
            for (int i = 0; i < M; ++i) tau2(k, i) = uniform(eng, t_range.at(0), t_range.at(1));
          }
        }
        const Scenario s = make_scenario(M, N, K, db_to_linear(snr), std::move(corr), tau2);
        const double alpha = alpha_opt(s).alpha_opt;
        const double rbar = bits(det_sum_rate(s, alpha));
        const McPoint mc = monte_carlo(s, alpha, spec.trials, derive_seed(seed, 1), spec.workers, res);
        const double rel = (mc.mean_bits - rbar) / mc.mean_bits;
        errs.push_back(std::abs(rel));
        res.table.add({cases[c], fmt(n1), fmt(K), fmt(d), fmt_exact(alpha), std::to_string(seed),
                       fmt(spec.trials), fmt(rbar), fmt(mc.mean_bits), fmt(mc.se_bits), fmt(rel)});
      }
      const MeanStderr ms = mean_stderr(errs);
      mean_abs.push_back(ms.mean);
      res.table.add({cases[c], fmt(n1), fmt(K), "mean_abs", "", "", fmt(spec.trials), "", "", fmt(ms.std_error),
                     fmt(ms.mean)});
    }
    bool decreasing = true;
    std::ostringstream os;
    for (std::size_t j = 0; j < mean_abs.size(); ++j) {
      if (j && !(mean_abs[j] < mean_abs[j - 1])) decreasing = false;
      os << (j ? " > " : "") << fmt(mean_abs[j], 4);
    }
    res.checks.push_back({"decreasing relative error " + cases[c], decreasing, os.str()});
  }
  power_check(res);
}

// --------------------------------------------------------------------------
// Bit-allocation helpers shared by fig4, fig6, antratio and fig8.
// --------------------------------------------------------------------------
struct AllocationRow {
  std::string policy;
  IMatrix bits;
  double alpha = 0.0;
  double rbar_bits = 0.0;
  std::size_t evaluated = 0;
};

inline AllocationRow fixed_allocation(const Scenario& s, const IMatrix& b, const std::string& policy) {
  const CandidateValue v = evaluate_allocation(s, b);
  return {policy, b, v.alpha, bits(v.rate), 1};
}

inline AllocationRow searched_allocation(const Scenario& s, int B, SearchSpace sp,
                                         const std::string& policy, unsigned workers) {
  AllocationOptions o;
  o.workers = workers;
  const AllocationResult r = search_allocation(s, B, sp, o);
  return {policy, r.allocation.bits, r.alpha, bits(r.sum_rate_nats), r.evaluated};
}

// --------------------------------------------------------------------------
// fig4: ergodic sum-rate vs SNR for Monte-Carlo-optimal, deterministic-
// optimal and uniform bit allocations; T_i = rho_i I.
// --------------------------------------------------------------------------
inline void run_fig4(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  const auto N = p.get("N", std::vector<int>{4, 4});
  const int K = p.get("K", 4);
  const auto gains = p.get("gains", std::vector<double>{1.0, 0.0125});
  const auto budgets = p.get("budgets", std::vector<int>{6});
  const auto snr = p.get("snr_db", std::vector<double>{0, 5, 10, 15, 20, 25, 30});
  check_grid(snr, "snr_db");
  check_grid(budgets, "budgets");
  const int M = static_cast<int>(N.size());
  if (static_cast<int>(gains.size()) != M) throw Error("gains must list one value per BS");

  res.table.header = {"budget", "snr_db", "policy", "bits", "alpha", "seed", "trials",
                      "rbar_bits", "mc_bits", "mc_se_bits"};
  int det_not_worse = 0, points = 0;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    for (std::size_t j = 0; j < snr.size(); ++j) {
      const Scenario s0 = gain_scenario(K, N, gains, db_to_linear(snr[j]), RMatrix::Zero(K, M));
      const std::uint64_t seed = derive_seed(spec.seed, b, j);
      const int B = budgets[b];
      std::vector<AllocationRow> rows;
      rows.push_back(searched_allocation(s0, B, SearchSpace::full, "det_opt", spec.workers));
      rows.push_back(fixed_allocation(s0, uniform_allocation(s0, B), "uniform"));

      // Monte-Carlo-optimal: every user-symmetric candidate scored by the
      // ergodic rate at its own alpha-bar-opt (common random numbers).
      AllocationRow best{"mc_opt", IMatrix(), 0.0, 0.0, 0};
      double best_mc = -1.0;
      for (const auto& cand : enumerate_full(B, M)) {
        IMatrix bm(K, M);
        for (int k = 0; k < K; ++k) {
          for (int i = 0; i < M; ++i) bm(k, i) = cand[i];
        }
        const AllocationRow r = fixed_allocation(s0, bm, "mc_opt");
        const Scenario sc = with_tau2(s0, tau2_from_allocation(s0, bm));
        const McPoint mc = monte_carlo(sc, r.alpha, spec.trials, seed, spec.workers, res);
        ++best.evaluated;
        if (mc.mean_bits > best_mc) {
          best_mc = mc.mean_bits;
          const std::size_t ev = best.evaluated;
          best = r;
          best.evaluated = ev;
        }
      }
      rows.push_back(best);

      std::map<std::string, double> mc_by_policy;
      for (const auto& r : rows) {
        const Scenario sc = with_tau2(s0, tau2_from_allocation(s0, r.bits));
        const McPoint mc = monte_carlo(sc, r.alpha, spec.trials, seed, spec.workers, res);
        mc_by_policy[r.policy] = mc.mean_bits;
        res.table.add({fmt(B), fmt(snr[j]), r.policy, fmt_bits(r.bits), fmt_exact(r.alpha),
                       std::to_string(seed), fmt(spec.trials), fmt(r.rbar_bits), fmt(mc.mean_bits),
                       fmt(mc.se_bits)});
      }
      ++points;
      if (mc_by_policy["det_opt"] >= mc_by_policy["uniform"]) ++det_not_worse;
    }
  }
  res.checks.push_back({"deterministic-optimal allocation beats uniform", det_not_worse == points,
                        std::to_string(det_not_worse) + "/" + std::to_string(points) + " sweep points"});
  power_check(res);
}

// --------------------------------------------------------------------------
// fig5: ergodic sum-rate for alpha policies (Monte-Carlo grid optimum,
// alpha-bar-opt, 1/(M rho beta)); random T and tau2.
// --------------------------------------------------------------------------
inline void run_fig5(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  const auto N = p.get("N", std::vector<int>{4, 4});
  const int K = p.get("K", 4);
  const auto snr = p.get("snr_db", std::vector<double>{0, 5, 10, 15, 20, 25, 30});
  check_grid(snr, "snr_db");
  const auto r_range = p.get("r_range", std::vector<double>{0.0, 0.9});
  const auto t_range = p.get("tau2_range", std::vector<double>{0.0, 1.0});
  const auto grid_range = p.get("alpha_grid", std::vector<double>{1e-3, 1e2});
  const int grid_points = p.get("alpha_grid_points", 41);
  const double rel_tol = p.get("indistinguishable_rel_tol", 0.02);
  const int M = static_cast<int>(N.size());

  Engine eng = make_engine(derive_seed(spec.seed, 0));
  auto corr = random_pattern(eng, K, N, std::vector<double>(M, 1.0), r_range.at(0), r_range.at(1), false);
  RMatrix tau2(K, M);
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < M; ++i) tau2(k, i) = uniform(eng, t_range.at(0), t_range.at(1));
  }
  const Scenario base = make_scenario(M, N, K, 1.0, std::move(corr), tau2);
  const auto grid = log_grid(grid_range.at(0), grid_range.at(1), grid_points);

  res.table.header = {"snr_db", "policy", "alpha", "seed", "trials", "rbar_bits", "mc_bits", "mc_se_bits"};
  bool all_close = true;
  double worst = 0.0;
  for (std::size_t j = 0; j < snr.size(); ++j) {
    const Scenario s = with_rho(base, db_to_linear(snr[j]));
    const std::uint64_t seed = derive_seed(spec.seed, 1, j);
    double best_alpha = grid[0];
    McPoint best{-1.0, 0.0};
    for (double a : grid) {
      const McPoint mc = monte_carlo(s, a, spec.trials, seed, spec.workers, res);
      if (mc.mean_bits > best.mean_bits) {
        best = mc;
        best_alpha = a;
      }
    }
    const double a_det = alpha_opt(s).alpha_opt;
    const double a_naive = alpha_naive(s);
    const McPoint mc_det = monte_carlo(s, a_det, spec.trials, seed, spec.workers, res);
    const McPoint mc_naive = monte_carlo(s, a_naive, spec.trials, seed, spec.workers, res);
    const double gap = (best.mean_bits - mc_det.mean_bits) / best.mean_bits;
    worst = std::max(worst, gap);
    all_close = all_close && gap <= rel_tol;
    auto row = [&](const std::string& pol, double a, const McPoint& mc) {
      res.table.add({fmt(snr[j]), pol, fmt_exact(a), std::to_string(seed), fmt(spec.trials),
                     fmt(bits(det_sum_rate(s, a))), fmt(mc.mean_bits), fmt(mc.se_bits)});
    };
    row("mc_grid_opt", best_alpha, best);
    row("det_opt", a_det, mc_det);
    row("naive", a_naive, mc_naive);
  }
  res.checks.push_back({"alpha-bar-opt close to the Monte-Carlo optimum", all_close,
                        "worst relative shortfall " + fmt(worst, 4)});
  power_check(res);
}

// --------------------------------------------------------------------------
// fig6: deterministic sum-rate vs inter-cell gain ratio, optimal vs
// uniform allocation.
// --------------------------------------------------------------------------
inline void run_fig6(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  const auto N = p.get("N", std::vector<int>{4, 4});
  const int K = p.get("K", 4);
  const double snr = p.get("snr_db", 10.0);
  const auto ratios = p.get("ratio_db", std::vector<double>{0, 5, 10, 15, 20});
  const auto budgets = p.get("budgets", std::vector<int>{4, 8, 12});
  check_grid(ratios, "ratio_db");
  check_grid(budgets, "budgets");
  if (N.size() != 2) throw Error("fig6 compares two BSs; N must have two entries");

  res.table.header = {"budget", "ratio_db", "policy", "bits", "alpha", "seed", "trials", "rbar_bits",
                      "evaluated"};
  bool uniform_at_unity = true, dominates = true;
  for (int B : budgets) {
    for (double r : ratios) {
      const Scenario s = gain_scenario(K, N, {1.0, db_to_linear(-r)}, db_to_linear(snr), RMatrix::Zero(K, 2));
      const AllocationRow opt = searched_allocation(s, B, SearchSpace::full, "optimal", spec.workers);
      const AllocationRow uni = fixed_allocation(s, uniform_allocation(s, B), "uniform");
      if (r == 0.0 && B % 2 == 0 && opt.bits != uni.bits) uniform_at_unity = false;
      if (opt.rbar_bits < uni.rbar_bits) dominates = false;
      for (const auto& row : {opt, uni}) {
        res.table.add({fmt(B), fmt(r), row.policy, fmt_bits(row.bits), fmt_exact(row.alpha),
                       std::to_string(spec.seed), "0", fmt(row.rbar_bits), fmt(row.evaluated)});
      }
    }
  }
  res.checks.push_back({"uniform allocation optimal at equal gains", uniform_at_unity, "even budgets, ratio 0 dB"});
  res.checks.push_back({"optimal allocation never below uniform", dominates, "deterministic sum-rate"});
}

// --------------------------------------------------------------------------
// antratio: ergodic sum-rate vs antenna ratio N2/N1 at equal gains.
// --------------------------------------------------------------------------
inline void run_antratio(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  const int n1 = p.get("N1", 4);
  const auto ratios = p.get("antenna_ratio", std::vector<int>{1, 2, 3, 4});
  const int K = p.get("K", 4);
  const double snr = p.get("snr_db", 10.0);
  const auto budgets = p.get("budgets", std::vector<int>{4, 8});
  check_grid(ratios, "antenna_ratio");
  check_grid(budgets, "budgets");

  res.table.header = {"budget", "N2_over_N1", "policy", "bits", "alpha", "seed", "trials", "rbar_bits",
                      "mc_bits", "mc_se_bits"};
  bool dominates = true;
  for (std::size_t b = 0; b < budgets.size(); ++b) {
    for (std::size_t j = 0; j < ratios.size(); ++j) {
      const std::vector<int> N{n1, n1 * ratios[j]};
      const Scenario s = gain_scenario(K, N, {1.0, 1.0}, db_to_linear(snr), RMatrix::Zero(K, 2));
      const std::uint64_t seed = derive_seed(spec.seed, b, j);
      const AllocationRow opt = searched_allocation(s, budgets[b], SearchSpace::full, "optimal", spec.workers);
      const AllocationRow uni = fixed_allocation(s, uniform_allocation(s, budgets[b]), "uniform");
      if (opt.rbar_bits < uni.rbar_bits) dominates = false;
      for (const auto& row : {opt, uni}) {
        const Scenario sc = with_tau2(s, tau2_from_allocation(s, row.bits));
        const McPoint mc = monte_carlo(sc, row.alpha, spec.trials, seed, spec.workers, res);
        res.table.add({fmt(budgets[b]), fmt(ratios[j]), row.policy, fmt_bits(row.bits), fmt_exact(row.alpha),
                       std::to_string(seed), fmt(spec.trials), fmt(row.rbar_bits), fmt(mc.mean_bits),
                       fmt(mc.se_bits)});
      }
    }
  }
  res.checks.push_back({"optimal allocation never below uniform", dominates, "deterministic sum-rate"});
  power_check(res);
}

// --------------------------------------------------------------------------
// fig7: sizes of the full and rank-restricted search spaces.
// --------------------------------------------------------------------------
inline void run_fig7(const ExperimentSpec&, Params& p, ExperimentResult& res) {
  const auto Ms = p.get("M", std::vector<int>{3, 5});
  const int b_max = p.get("B_max", 20);
  check_grid(Ms, "M");
  if (b_max < 0) throw Error("B_max must be >= 0");
  res.table.header = {"M", "B", "full", "restricted", "full_formula", "restricted_formula"};
  std::map<std::pair<int, int>, std::pair<std::size_t, std::size_t>> at;
  bool formulas = true;
  for (int M : Ms) {
    for (int B = 0; B <= b_max; ++B) {
      const std::size_t f = enumerate_full(B, M).size();
      const std::size_t r = enumerate_restricted(B, M).size();
      const auto cf = count_compositions(B, M);
      const auto cp = count_partitions(B, M);
      formulas = formulas && f == cf && r == cp;
      at[{M, B}] = {f, r};
      res.table.add({fmt(M), fmt(B), fmt(f), fmt(r), fmt(static_cast<std::size_t>(cf)),
                     fmt(static_cast<std::size_t>(cp))});
    }
  }
  res.checks.push_back({"enumeration matches closed counts", formulas, "B <= " + std::to_string(b_max)});
  auto expect = [&](int M, std::size_t f, std::size_t r) {
    if (!at.count({M, 9})) return;
    const auto got = at[{M, 9}];
    res.checks.push_back({"B=9 M=" + std::to_string(M), got.first == f && got.second == r,
                          std::to_string(got.first) + " full / " + std::to_string(got.second) + " restricted"});
  };
  expect(5, 715, 23);
  expect(3, 55, 12);
}

// --------------------------------------------------------------------------
// fig8: restricted vs full search over random correlation patterns.
// --------------------------------------------------------------------------
inline void run_fig8(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  const auto N = p.get("N", std::vector<int>{3, 3, 3});
  const int K = p.get("K", 3);
  const double snr = p.get("snr_db", 20.0);
  // rho_1/rho_2 = -5 dB and rho_1/rho_3 = 10 dB.
  const auto gains_db = p.get("gain_db", std::vector<double>{0.0, 5.0, -10.0});
  const int B = p.get("budget", 9);
  const int patterns = p.get("patterns", 20);
  const bool shared = p.get("user_shared", true);
  const auto r_range = p.get("r_range", std::vector<double>{0.0, 0.9});
  const double ratio_tol = p.get("min_ratio", 0.99);
  const int M = static_cast<int>(N.size());
  if (static_cast<int>(gains_db.size()) != M) throw Error("gain_db must list one value per BS");
  if (patterns < 1) throw Error("patterns must be >= 1");
  std::vector<double> gains;
  for (double g : gains_db) gains.push_back(db_to_linear(g));

  res.table.header = {"pattern", "policy", "bits", "alpha", "seed", "trials", "rbar_bits", "mc_bits",
                      "mc_se_bits", "evaluated", "ordering_holds"};
  double worst_ratio = std::numeric_limits<double>::infinity();
  double worst_eval = 0.0;
  int ordered = 0;
  for (int t = 0; t < patterns; ++t) {
    const std::uint64_t seed = derive_seed(spec.seed, static_cast<std::uint64_t>(t));
    Engine eng = make_engine(seed);
    auto corr = random_pattern(eng, K, N, gains, r_range.at(0), r_range.at(1), shared);
    const Scenario s = make_scenario(M, N, K, db_to_linear(snr), std::move(corr), RMatrix::Zero(K, M));
    AllocationOptions o;
    o.workers = spec.workers;
    const AllocationResult rr = search_allocation(s, B, SearchSpace::restricted, o);
    const AllocationResult rf = search_allocation(s, B, SearchSpace::full, o);
    const AllocationRow uni = fixed_allocation(s, uniform_allocation(s, B), "uniform");

    // Diagnostic: does the full-space optimum follow the gain ranking?
    BitAllocation probe = rf.allocation;
    probe.restricted = true;
    probe.ranking = rr.ranking.order;
    const bool holds = probe.check().empty();
    ordered += holds ? 1 : 0;

    worst_ratio = std::min(worst_ratio, rr.sum_rate_nats / rf.sum_rate_nats);
    worst_eval = std::max(worst_eval, static_cast<double>(rr.evaluated) / static_cast<double>(rf.evaluated));
    const std::vector<AllocationRow> rows{
        {"restricted", rr.allocation.bits, rr.alpha, bits(rr.sum_rate_nats), rr.evaluated},
        {"full", rf.allocation.bits, rf.alpha, bits(rf.sum_rate_nats), rf.evaluated},
        uni};
    for (const auto& row : rows) {
      const Scenario sc = with_tau2(s, tau2_from_allocation(s, row.bits));
      const McPoint mc = monte_carlo(sc, row.alpha, spec.trials, derive_seed(seed, 1), spec.workers, res);
      res.table.add({fmt(t), row.policy, fmt_bits(row.bits), fmt_exact(row.alpha), std::to_string(seed),
                     fmt(spec.trials), fmt(row.rbar_bits), fmt(mc.mean_bits), fmt(mc.se_bits),
                     fmt(row.evaluated), row.policy == "full" ? (holds ? "1" : "0") : ""});
    }
  }
  res.checks.push_back({"restricted optimum within tolerance of full optimum", worst_ratio >= ratio_tol,
                        "worst ratio " + fmt(worst_ratio, 6)});
  const double bound = static_cast<double>(count_partitions(B, M)) / static_cast<double>(count_compositions(B, M));
  res.checks.push_back({"restricted search size", worst_eval <= bound + 1e-12,
                        "evaluated fraction " + fmt(worst_eval, 4) + " (bound " + fmt(bound, 4) + ")"});
  res.warnings.push_back("full-space optimum follows the gain ranking in " + std::to_string(ordered) + "/" +
                         std::to_string(patterns) + " patterns (diagnostic)");
  power_check(res);
}

// --------------------------------------------------------------------------
// scenario: deterministic vs Monte-Carlo on a user-supplied scenario,
// optionally over an SNR grid.
// --------------------------------------------------------------------------
inline void run_scenario(const ExperimentSpec& spec, Params& p, ExperimentResult& res) {
  if (!spec.scenario) throw Error("experiment 'scenario' needs a scenario config");
  const Scenario base = build_scenario(*spec.scenario, spec.base_dir);
  for (const auto& w : base.warnings) res.warnings.push_back(w);
  std::vector<double> snr = p.get("snr_db", std::vector<double>{linear_to_db(base.rho)});
  check_grid(snr, "snr_db");
  const std::string policy = p.get("policy", std::string("opt"));

  res.table.header = {"snr_db", "policy", "alpha", "seed", "trials", "rbar_bits", "mc_bits", "mc_se_bits",
                      "rel_error"};
  for (std::size_t j = 0; j < snr.size(); ++j) {
    const Scenario s = snr.size() == 1 && spec.scenario->contains("rho") ? base : with_rho(base, db_to_linear(snr[j]));
    double alpha = 0.0;
    if (policy == "opt") {
      alpha = alpha_opt(s).alpha_opt;
    } else if (policy == "naive") {
      alpha = alpha_naive(s);
    } else {
      alpha = std::stod(policy);  // explicit numeric alpha
    }
    const std::uint64_t seed = derive_seed(spec.seed, j);
    const double rbar = bits(det_sum_rate(s, alpha));
    const McPoint mc = monte_carlo(s, alpha, spec.trials, seed, spec.workers, res);
    res.table.add({fmt(snr[j]), policy, fmt_exact(alpha), std::to_string(seed), fmt(spec.trials), fmt(rbar),
                   fmt(mc.mean_bits), fmt(mc.se_bits), fmt((mc.mean_bits - rbar) / mc.mean_bits)});
  }
  power_check(res);
}

using Runner = std::function<void(const ExperimentSpec&, Params&, ExperimentResult&)>;

inline const std::map<std::string, Runner>& registry() {
  static const std::map<std::string, Runner> r{
      {"fig2", run_fig2},   {"fig3", run_fig3}, {"fig4", run_fig4},         {"fig5", run_fig5},
      {"fig6", run_fig6},   {"fig7", run_fig7}, {"antratio", run_antratio}, {"fig8", run_fig8},
      {"scenario", run_scenario},
  };
  return r;
}

}  // namespace detail

inline std::vector<std::string> experiment_names() {
  std::vector<std::string> out;
  for (const auto& [k, v] : detail::registry()) out.push_back(k);
  return out;
}

/// Runs one experiment. Failures do not throw: the result carries the
/// rows completed so far, a FAILED marker row and the diagnostic.
inline ExperimentResult run_experiment(const ExperimentSpec& spec) {
  ExperimentResult res;
  res.name = spec.name;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    const auto& reg = detail::registry();
    const auto it = reg.find(spec.name);
    if (it == reg.end()) throw Error("unknown experiment '" + spec.name + "'");
    if (spec.trials < 1) throw Error("trials must be >= 1");
    detail::Params p(spec.params);
    try {
      it->second(spec, p, res);
    } catch (...) {
      res.params = p.used();
      throw;
    }
    res.params = p.used();
    for (const auto& k : p.unused()) res.warnings.push_back("unused parameter '" + k + "'");
    res.completed = true;
  } catch (const std::exception& e) {
    res.completed = false;
    res.failure = e.what();
    if (!res.table.header.empty()) {
      std::vector<std::string> marker(res.table.header.size());
      marker[0] = "FAILED";
      marker.back() = res.failure;
      res.table.rows.push_back(std::move(marker));
    }
  }
  res.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return res;
}

/// Deterministic run manifest (no timing; see run_metadata()).
inline json run_manifest(const ExperimentSpec& spec, const ExperimentResult& res, const std::string& csv_name) {
  json checks = json::array();
  for (const auto& c : res.checks) checks.push_back({{"name", c.name}, {"pass", c.pass}, {"detail", c.detail}});
  json m{{"experiment", spec.name},
         {"status", res.completed ? "completed" : "failed"},
         {"seed", spec.seed},
         {"trials", spec.trials},
         {"params", res.params},
         {"csv", csv_name},
         {"columns", res.table.header},
         {"rows", res.table.rows.size()},
         {"checks", checks},
         {"warnings", res.warnings},
         {"power", {{"violations", res.power_violations},
                    {"realizations", res.mc_realizations},
                    {"worst_deviation", res.worst_power_deviation}}},
         {"rate_unit", "bits/s/Hz"}};
  if (spec.scenario) m["scenario"] = *spec.scenario;
  if (!res.completed) m["failure"] = res.failure;
  return m;
}

inline json run_metadata(const ExperimentResult& res, unsigned workers) {
  return json{{"experiment", res.name},
              {"wall_seconds", res.wall_seconds},
              {"workers", workers},
              {"hardware_concurrency", std::thread::hardware_concurrency()},
#ifdef __VERSION__
              {"compiler", __VERSION__},
#endif
              {"eigen", std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                            std::to_string(EIGEN_MINOR_VERSION)}};
}

/// Human-readable summary with pass/fail per bundled check.
inline std::string emit_report(const std::vector<ExperimentResult>& results) {
  const bool any = std::any_of(results.begin(), results.end(), [](const auto& r) { return r.completed; });
  if (!any) throw Error("no experiments completed");
  std::ostringstream os;
  for (const auto& r : results) {
    os << "experiment " << r.name << ": " << (r.completed ? "completed" : "FAILED: " + r.failure) << ", "
       << r.table.rows.size() << " rows\n";
    for (const auto& c : r.checks) os << "  [" << (c.pass ? "PASS" : "FAIL") << "] " << c.name << ": " << c.detail << '\n';
    for (const auto& w : r.warnings) os << "  note: " << w << '\n';
  }
  return os.str();
}

}  // namespace rzf

#endif  // RZF_EXPERIMENTS_HPP
