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

// Acceptance runner: prints one "criterion N: PASS|FAIL: detail" line per
// criterion and exits nonzero if any criterion fails. An optional first
// argument names a directory that receives every result CSV.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "oracles.hpp"
#include "rzf/rzf.hpp"

namespace {

using namespace rzf;
using nlohmann::json;

struct Outcome {
  bool pass = false;
  std::string detail;
  Table table;  // result CSV compared by the determinism criterion
  std::size_t power_violations = 0;
  std::size_t realizations = 0;
  double worst_power_deviation = 0.0;
};

double rel(double a, double b) { return std::abs(a - b) / std::abs(b); }

std::string failed_checks(const ExperimentResult& r) {
  std::string out;
  for (const auto& c : r.checks) {
    if (!c.pass) out += (out.empty() ? "" : "; ") + c.name + " (" + c.detail + ")";
  }
  return out;
}

Outcome from_experiment(const ExperimentResult& r) {
  Outcome o;
  o.table = r.table;
  o.power_violations = r.power_violations;
  o.realizations = r.mc_realizations;
  o.worst_power_deviation = r.worst_power_deviation;
  return o;
}

// 1. Golden section against the closed forms on T = I homogeneous systems.
Outcome criterion1() {
  Outcome o;
  o.table.header = {"M", "N", "K", "snr_db", "tau2", "alpha_golden", "alpha_closed", "rel_diff"};
  double worst = 0.0;
  const int dims[][3] = {{4, 8, 32}, {2, 8, 8}, {3, 6, 12}, {1, 16, 8}};
  for (const auto& d : dims) {
    for (double snr : {0.0, 10.0, 20.0}) {
      for (double tau2 : {0.0, 0.1, 0.3}) {
        const Scenario s = uniform_scenario(d[0], std::vector<int>(d[0], d[1]), d[2], db_to_linear(snr), tau2);
        const double golden = golden_section_alpha(s).alpha_opt;
        const double closed = tau2 == 0.0 ? 1.0 / (s.M * s.rho * s.beta[0])
                                          : alpha_uncorrelated(s.M, s.rho, s.beta[0], std::sqrt(1.0 - tau2));
        const double r = rel(golden, closed);
        worst = std::max(worst, r);
        o.table.add({fmt(d[0]), fmt(d[1]), fmt(d[2]), fmt(snr), fmt(tau2), fmt_exact(golden),
                     fmt_exact(closed), fmt(r)});
      }
    }
  }
  o.pass = worst <= 1e-3;
  o.detail = "worst relative difference " + fmt(worst, 3) + " over " + fmt(o.table.rows.size()) +
             " scenarios (limit 1e-3)";
  return o;
}

// 2. First-order optimality at the homogeneous fixed point, correlated T.
Outcome criterion2() {
  Outcome o;
  o.table.header = {"M", "N", "K", "snr_db", "r", "tau2", "alpha", "rbar_nats", "scaled_derivative"};
  const double cases[][6] = {{2, 8, 8, 10, 0.3, 0.1},  {2, 8, 16, 20, 0.6, 0.2}, {3, 6, 9, 0, 0.8, 0.05},
                             {4, 8, 32, 10, 0.5, 0.3}, {1, 12, 6, 15, 0.9, 0.1}, {2, 10, 5, 5, 0.7, 0.0}};
  double worst = 0.0;
  for (const auto& c : cases) {
    const int M = static_cast<int>(c[0]);
    const Scenario s = build_scenario(json{{"M", M}, {"N", static_cast<int>(c[1])}, {"K", static_cast<int>(c[2])},
                                           {"snr_db", c[3]}, {"correlation", {{"kind", "exp"}, {"r", c[4]}}},
                                           {"tau2", c[5]}});
    const double a = prop1_alpha(s).alpha_opt;
    const double h = 1e-5 * a;
    const double r = det_sum_rate(s, a);
    const double d = (det_sum_rate(s, a + h) - det_sum_rate(s, a - h)) / (2.0 * h);
    const double scaled = std::abs(d) / (r / a);
    worst = std::max(worst, scaled);
    o.table.add({fmt(M), fmt(c[1]), fmt(c[2]), fmt(c[3]), fmt(c[4]), fmt(c[5]), fmt_exact(a), fmt(r), fmt(scaled)});
  }
  o.pass = worst < 1e-4;
  o.detail = "worst |dR/dalpha| / (R/alpha) = " + fmt(worst, 3) + " over " + fmt(o.table.rows.size()) +
             " correlated scenarios (limit 1e-4)";
  return o;
}

// 3. Search-space sizes: published values and brute-force counts.
Outcome criterion3() {
  Outcome o;
  o.table.header = {"B", "M", "full", "restricted", "brute_full", "brute_restricted"};
  bool ok = enumerate_full(9, 5).size() == 715 && enumerate_restricted(9, 5).size() == 23 &&
            enumerate_full(9, 3).size() == 55 && enumerate_restricted(9, 3).size() == 12;
  int mismatches = 0;
  for (int M = 1; M <= 6; ++M) {
    for (int B = 0; B <= 20; ++B) {
      const std::size_t f = enumerate_full(B, M).size(), r = enumerate_restricted(B, M).size();
      const auto bf = oracle::brute_compositions(B, M), br = oracle::brute_partitions(B, M);
      if (f != bf || r != br || count_compositions(B, M) != bf || count_partitions(B, M) != br) ++mismatches;
      o.table.add({fmt(B), fmt(M), fmt(f), fmt(r), fmt(static_cast<std::size_t>(bf)),
                   fmt(static_cast<std::size_t>(br))});
    }
  }
  o.pass = ok && mismatches == 0;
  o.detail = std::string("B=9: 715/23 and 55/12 ") + (ok ? "match" : "MISMATCH") + "; " +
             std::to_string(mismatches) + " count mismatches for B<=20, M<=6";
  return o;
}

// 4. Deterministic equivalent vs Monte-Carlo on the four-cell setting.
Outcome criterion4() {
  ExperimentSpec spec;
  spec.name = "fig2";
  spec.seed = 1;
  spec.trials = 2000;
  spec.params = json{{"snr_db", {0.0, 10.0, 20.0}},
                     {"cases", json::array({json{{"name", "tau2=0"}, {"tau2", 0.0}},
                                            json{{"name", "tau2=0.1"}, {"tau2", 0.1}},
                                            json{{"name", "tau2=0.3"}, {"tau2", 0.3}}})},
                     {"policies", {"opt"}}};
  const ExperimentResult r = run_experiment(spec);
  Outcome o = from_experiment(r);
  if (!r.completed) {
    o.detail = "run failed: " + r.failure;
    return o;
  }
  // Per-point gaps from the table.
  const auto& h = r.table.header;
  auto col = [&](const char* n) { return std::find(h.begin(), h.end(), n) - h.begin(); };
  int bad = 0;
  std::ostringstream gaps;
  for (const auto& row : r.table.rows) {
    const double rbar = std::stod(row[col("rbar_bits")]), mc = std::stod(row[col("mc_bits")]);
    const double se = std::stod(row[col("mc_se_bits")]);
    const bool ok = std::abs(mc - rbar) <= std::max(3.0 * se, 0.03 * rbar);
    if (!ok) {
      ++bad;
      gaps << ' ' << row[col("case")] << "@" << row[col("snr_db")] << "dB:" << fmt(100.0 * (mc - rbar) / rbar, 3)
           << "%";
    }
  }
  o.pass = bad == 0;
  o.detail = std::to_string(r.table.rows.size() - bad) + "/" + std::to_string(r.table.rows.size()) +
             " points within max(3 SE, 3%)" + (bad ? "; outside:" + gaps.str() : "");
  return o;
}

// 5. Relative error decreases with dimension (correlated T, random tau2).
Outcome criterion5() {
  ExperimentSpec spec;
  spec.name = "fig3";
  spec.seed = 2;
  spec.trials = 500;
  spec.params = json{{"cases", {"random"}}, {"draws", 20}};
  const ExperimentResult r = run_experiment(spec);
  Outcome o = from_experiment(r);
  if (!r.completed) {
    o.detail = "run failed: " + r.failure;
    return o;
  }
  o.pass = !r.checks.empty() && r.checks.front().pass;
  o.detail = "mean relative error by N1=4,8,16,32: " + r.checks.front().detail;
  return o;
}

// 6. Large-system residuals at N = 32, 64, 128 with 500 draws.
Outcome criterion6() {
  Outcome o;
  o.table.header = {"N", "term", "mean", "std_error", "z", "mean_abs"};
  std::map<std::string, std::vector<double>> mean_abs;
  std::string within_detail;
  bool within = true;
  for (int n : {32, 64, 128}) {
    // Unequal cells keep the per-BS noise maximum away from ties.
    const Scenario s = uniform_scenario(2, {5 * n / 8, 3 * n / 8}, n / 2, db_to_linear(10.0), 0.2);
    const double alpha = golden_section_alpha(s).alpha_opt;
    const ResidualReport rep = validate_appendix_terms(s, alpha, 500, derive_seed(6, static_cast<std::uint64_t>(n)));
    o.power_violations += rep.power_violations;
    o.realizations += rep.trials;
    o.worst_power_deviation = std::max(o.worst_power_deviation, rep.worst_power_deviation);
    const std::pair<const char*, const TermResidual*> terms[] = {{"noise", &rep.noise},
                                                                  {"signal", &rep.signal},
                                                                  {"interference", &rep.interference},
                                                                  {"bilinear_xx", &rep.bilinear_xx},
                                                                  {"bilinear_xv", &rep.bilinear_xv}};
    for (const auto& [name, t] : terms) {
      const double z = t->mean / t->std_error;
      o.table.add({fmt(n), name, fmt(t->mean), fmt(t->std_error), fmt(z, 4), fmt(t->mean_abs)});
      mean_abs[name].push_back(t->mean_abs);
      if (n == 128) {
        within = within && t->within(3.0);
        within_detail += std::string(within_detail.empty() ? "" : " ") + name + "=" + fmt(z, 3);
      }
    }
  }
  bool shrink = true;
  std::string not_shrinking;
  for (const auto& [name, v] : mean_abs) {
    if (!(v[1] < v[0] && v[2] < v[1])) {
      shrink = false;
      not_shrinking += " " + name;
    }
  }
  o.pass = within && shrink;
  o.detail = "z at N=128: " + within_detail + "; mean |residual| shrinks 32->64->128 " +
             (shrink ? "for all terms" : "except" + not_shrinking);
  return o;
}

// 7. Restricted vs full bit-allocation search over random patterns.
Outcome criterion7() {
  ExperimentSpec spec;
  spec.name = "fig8";
  spec.seed = 7;
  spec.trials = 500;
  const ExperimentResult r = run_experiment(spec);
  Outcome o = from_experiment(r);
  if (!r.completed) {
    o.detail = "run failed: " + r.failure;
    return o;
  }
  o.pass = r.checks.size() >= 2 && r.checks[0].pass && r.checks[1].pass;
  o.detail = r.checks[0].detail + "; " + r.checks[1].detail;
  return o;
}

// 8. Two identical cells with an even budget get the uniform allocation.
Outcome criterion8() {
  Outcome o;
  o.table.header = {"correlation", "budget", "space", "bits", "strategy"};
  int wrong = 0, total = 0;
  const std::vector<std::pair<std::string, CMatrix>> kinds = {{"identity", CMatrix::Identity(4, 4)},
                                                              {"exp0.6", exp_correlation(4, 0.6)}};
  for (const auto& [label, t] : kinds) {
    const Scenario s = make_scenario(2, {4, 4}, 4, db_to_linear(10.0), std::vector<CMatrix>(8, t),
                                     RMatrix::Zero(4, 2));
    for (int B : {2, 4, 6, 8, 10, 12}) {
      for (SearchSpace sp : {SearchSpace::full, SearchSpace::restricted}) {
        const AllocationResult r = search_allocation(s, B, sp);
        ++total;
        if (r.allocation.bits != uniform_allocation(s, B)) ++wrong;
        o.table.add({label, fmt(B), to_string(sp), fmt_bits(r.allocation.bits), r.strategy});
      }
    }
  }
  o.pass = wrong == 0;
  o.detail = std::to_string(total - wrong) + "/" + std::to_string(total) +
             " searches returned the uniform allocation";
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  std::filesystem::path out_dir;
  if (argc > 1) {
    out_dir = argv[1];
    std::filesystem::create_directories(out_dir);
  }
  const std::vector<std::function<Outcome()>> runs = {criterion1, criterion2, criterion3, criterion4,
                                                      criterion5, criterion6, criterion7, criterion8};
  std::vector<Outcome> first;
  bool all = true;
  auto report = [&all](int n, bool pass, const std::string& detail) {
    all = all && pass;
    std::cout << "criterion " << n << ": " << (pass ? "PASS" : "FAIL") << ": " << detail << std::endl;
  };

  for (std::size_t c = 0; c < runs.size(); ++c) {
    Outcome o;
    try {
      o = runs[c]();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("exception: ") + e.what();
    }
    report(static_cast<int>(c) + 1, o.pass, o.detail);
    if (!out_dir.empty()) {
      std::ofstream(out_dir / ("criterion" + std::to_string(c + 1) + ".csv")) << o.table.to_csv();
    }
    first.push_back(std::move(o));
  }

  // 9. Every run repeated with the same seeds gives byte-identical CSVs.
  {
    int same = 0;
    std::string differing;
    for (std::size_t c = 0; c < runs.size(); ++c) {
      std::string again;
      try {
        again = runs[c]().table.to_csv();
      } catch (const std::exception& e) {
        again = std::string("exception: ") + e.what();
      }
      if (again == first[c].table.to_csv() && !first[c].table.rows.empty()) {
        ++same;
      } else {
        differing += " " + std::to_string(c + 1);
      }
    }
    report(9, same == static_cast<int>(runs.size()),
           std::to_string(same) + "/" + std::to_string(runs.size()) + " criterion runs byte-identical on repeat" +
               (differing.empty() ? "" : "; differing:" + differing));
  }

  // 10. Per-BS power constraint over every realization of criteria 4-7.
  {
    std::size_t violations = 0, realizations = 0;
    double worst = 0.0;
    for (std::size_t c = 3; c < 7; ++c) {
      violations += first[c].power_violations;
      realizations += first[c].realizations;
      worst = std::max(worst, first[c].worst_power_deviation);
    }
    report(10, violations == 0 && realizations > 0,
           std::to_string(violations) + " violations over " + std::to_string(realizations) +
               " realizations; worst relative deviation " + fmt(worst, 3) + " (limit 1e-9)");
  }
  return all ? 0 : 1;
}
