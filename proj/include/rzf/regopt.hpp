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

#ifndef RZF_REGOPT_HPP
#define RZF_REGOPT_HPP

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "rzf/common.hpp"
#include "rzf/det_sinr.hpp"
#include "rzf/scenario.hpp"

namespace rzf {

enum class AlphaMethod {
  golden_section,
  prop1_fixed_point,
  closed_form_uncorrelated,
  closed_form_perfect,
  closed_form_single_cell,
};

inline const char* to_string(AlphaMethod m) {
  switch (m) {
    case AlphaMethod::golden_section: return "golden_section";
    case AlphaMethod::prop1_fixed_point: return "prop1_fixed_point";
    case AlphaMethod::closed_form_uncorrelated: return "closed_form_uncorrelated";
    case AlphaMethod::closed_form_perfect: return "closed_form_perfect";
    case AlphaMethod::closed_form_single_cell: return "closed_form_single_cell";
  }
  return "unknown";
}

struct AlphaResult {
  double alpha_opt = 0.0;
  AlphaMethod method = AlphaMethod::golden_section;
  double objective = 0.0;  // deterministic sum-rate at alpha_opt, nats
  std::pair<double, double> bracket{0.0, 0.0};
  int iterations = 0;
  std::vector<double> trajectory;  // alpha iterates (fixed-point methods)
  std::vector<std::string> warnings;
};

/// alpha = (1/M + rho (1 - psi^2)) / (beta rho psi^2); T = I, homogeneous.
inline double alpha_uncorrelated(int M, double rho, double beta, double psi) {
  if (!(psi > 0.0 && psi <= 1.0)) {
    throw Error("closed-form alpha needs psi in (0, 1]; psi = 0 has no finite optimum");
  }
  if (!(rho > 0.0) || !(beta > 0.0) || M < 1) throw Error("closed-form alpha needs M, rho, beta > 0");
  return (1.0 / M + rho * (1.0 - psi * psi)) / (beta * rho * psi * psi);
}

inline std::pair<double, double> default_alpha_bracket(const Scenario& s) {
  const double min_beta = *std::min_element(s.beta.begin(), s.beta.end());
  return {1e-6, 10.0 * std::max(1.0, 1.0 / (s.M * s.rho * min_beta))};
}

struct GoldenOptions {
  double tolerance = 1e-6;  // relative width of the final alpha interval
  int scan_points = 11;
  int max_expansions = 3;
  FixedPointOptions fixed_point{};
};

/// Maximizes an objective over alpha > 0: coarse log-spaced scan (with upper
/// bracket expansion when the best scan point is the last one), then golden
/// section in log(alpha) around the best scan point.
inline AlphaResult maximize_alpha(const std::function<double(double)>& objective,
                                  std::pair<double, double> bracket, const GoldenOptions& opt) {
  double lo = bracket.first, hi = bracket.second;
  if (!(lo > 0.0 && hi > lo)) throw Error("alpha bracket must satisfy 0 < lo < hi");
  AlphaResult res;
  res.method = AlphaMethod::golden_section;
  const int n = std::max(opt.scan_points, 3);

  int evals = 0;
  double best_a = lo, best_f = -std::numeric_limits<double>::infinity();
  auto eval = [&](double a) {
    const double f = objective(a);
    if (!std::isfinite(f)) {
      std::ostringstream os;
      os << "objective evaluation failed at alpha = " << a;
      throw Error(os.str());
    }
    ++evals;
    if (f > best_f) {
      best_f = f;
      best_a = a;
    }
    return f;
  };

  std::vector<double> xs, fs;
  int j = 0;
  for (int expansion = 0;; ++expansion) {
    xs.assign(static_cast<std::size_t>(n), 0.0);
    fs.assign(static_cast<std::size_t>(n), 0.0);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (int p = 0; p < n; ++p) {
      xs[p] = p == n - 1 ? hi : std::exp(llo + (lhi - llo) * p / (n - 1));
      fs[p] = eval(xs[p]);
    }
    j = static_cast<int>(std::max_element(fs.begin(), fs.end()) - fs.begin());
    if (j != n - 1 || expansion >= opt.max_expansions) break;
    hi *= 10.0;
  }
  res.bracket = {lo, hi};

  int local_max = 0;
  for (int p = 0; p < n; ++p) {
    const bool left = p == 0 || fs[p] > fs[p - 1];
    const bool right = p == n - 1 || fs[p] > fs[p + 1];
    if (left && right) ++local_max;
  }
  if (local_max > 1) {
    res.warnings.push_back("objective is not unimodal on the coarse scan; golden section "
                           "refines the best scan point");
  }
  if (j == n - 1) res.warnings.push_back("maximum at the upper bracket after expansion");

  double a = std::log(xs[std::max(j - 1, 0)]);
  double b = std::log(xs[std::min(j + 1, n - 1)]);
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  double c = b - g * (b - a), d = a + g * (b - a);
  double fc = eval(std::exp(c)), fd = eval(std::exp(d));
  while (std::expm1(b - a) > opt.tolerance) {
    if (fc >= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - g * (b - a);
      fc = eval(std::exp(c));
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + g * (b - a);
      fd = eval(std::exp(d));
    }
  }
  res.alpha_opt = best_a;
  res.objective = best_f;
  res.iterations = evals;
  return res;
}

/// Golden-section search of the deterministic sum-rate.
inline AlphaResult golden_section_alpha(const Scenario& s, std::pair<double, double> bracket,
                                        const GoldenOptions& opt = {}) {
  return maximize_alpha(
      [&](double a) { return det_sum_rate(s, a, opt.fixed_point); }, bracket, opt);
}

inline AlphaResult golden_section_alpha(const Scenario& s, const GoldenOptions& opt = {}) {
  return golden_section_alpha(s, default_alpha_bracket(s), opt);
}

// ---------------------------------------------------------------------------
// Homogeneous systems: N_i = N_1, T_{k,i} = T, tau_{k,i} = tau_i.
// ---------------------------------------------------------------------------

/// Trace functionals of the common Psi = (T / (beta (M e1 + 1)) + alpha I)^{-1}.
struct HomogeneousState {
  double alpha = 0.0;
  double e1 = 0.0, e2 = 0.0, e3 = 0.0, e4 = 0.0, e5 = 0.0;
  double psi_avg = 0.0;  // (1/M) sum_i sqrt(1 - tau_i^2)
  double eta = 0.0;
  double beta = 0.0;
};

class HomogeneousSystem {
 public:
  explicit HomogeneousSystem(const Scenario& s) : M_(s.M), rho_(s.rho) {
    if (!is_homogeneous(s)) {
      throw InvalidScenario("homogeneity violated: need equal N_i, a common T and "
                            "user-independent tau per BS");
    }
    beta_ = s.beta[0];
    Eigen::SelfAdjointEigenSolver<CMatrix> es(s.T(0, 0), Eigen::EigenvaluesOnly);
    lambda_ = es.eigenvalues().cwiseMax(0.0);
    double acc = 0.0;
    for (int i = 0; i < s.M; ++i) {
      if (!(s.tau2(0, i) < 1.0)) throw InvalidScenario("homogeneous analysis needs tau_i < 1");
      acc += s.psi(0, i);
    }
    psi_ = acc / s.M;
  }

  int M() const { return M_; }
  double rho() const { return rho_; }
  double beta() const { return beta_; }
  double psi_avg() const { return psi_; }

  /// Solves e1 = (1/N) sum_j lambda_j / (lambda_j c + alpha), c = 1 / (beta (M e1 + 1)).
  HomogeneousState state(double alpha) const {
    if (!(alpha > 0.0)) throw Error("alpha must be positive");
    const double n = static_cast<double>(lambda_.size());
    auto f = [&](double e) {
      const double c = 1.0 / (beta_ * (M_ * e + 1.0));
      return (lambda_.array() / (lambda_.array() * c + alpha)).sum() / n;
    };
    // e - f(e) is convex and increasing past its root; bisection on a
    // bracket, then Newton polish.
    double lo = 0.0, hi = lambda_.sum() / (n * alpha) + 1.0;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid - f(mid) > 0.0 ? hi : lo) = mid;
    }
    double e = 0.5 * (lo + hi);
    for (int it = 0; it < 3; ++it) {
      const double h = 1e-7 * std::max(e, 1e-12);
      const double g = e - f(e);
      const double dg = 1.0 - (f(e + h) - f(e - h)) / (2.0 * h);
      if (dg > 0.0) {
        const double next = e - g / dg;
        if (next > lo && next < hi) e = next;
      }
    }
    HomogeneousState st;
    st.alpha = alpha;
    st.beta = beta_;
    st.psi_avg = psi_;
    const double c = 1.0 / (beta_ * (M_ * e + 1.0));
    const auto p = (lambda_.array() * c + alpha).inverse();
    const auto l = lambda_.array();
    st.e1 = (l * p).sum() / n;
    st.e2 = (l * p * p).sum() / n;
    st.e3 = (l * l * p * p).sum() / n;
    st.e4 = (l * p * p * p).sum() / n;
    st.e5 = (l * l * p * p * p).sum() / n;
    st.eta = (st.e3 * st.e4 - st.e5 * st.e2) / (M_ * st.e2 * st.e2 * st.e3);
    return st;
  }

  /// Right-hand side of the optimality fixed-point equation at `st`.
  double optimality_map(const HomogeneousState& st) const {
    const double psi2 = psi_ * psi_;
    const double a = 1.0 + M_ * st.e1;
    const double num = (1.0 + st.eta) * st.e2 + M_ * rho_ * (1.0 - psi2) * st.e3;
    const double den = M_ * beta_ * rho_ * st.e2 *
                       ((1.0 + st.eta) * psi2 + a * a * (1.0 - psi2) * st.eta);
    return num / den;
  }

  /// Common per-user deterministic SINR in closed homogeneous form.
  double gamma(const HomogeneousState& st) const {
    const double psi2 = psi_ * psi_;
    const double a = M_ * st.e1 + 1.0;
    const double num = static_cast<double>(M_) * M_ * psi2 * rho_ * st.e1 *
                       (st.e3 + st.alpha * beta_ * st.e2 * a * a);
    const double den = (a * a * (1.0 - psi2) + psi2) * M_ * st.e3 * rho_ + a * a * st.e2;
    return num / den;
  }

 private:
  int M_;
  double rho_;
  double beta_ = 0.0;
  double psi_ = 0.0;
  RVector lambda_;
};

inline double gamma_bar_homogeneous(const Scenario& s, double alpha) {
  const HomogeneousSystem h(s);
  return h.gamma(h.state(alpha));
}

struct HomogeneousOptions {
  double tolerance = 1e-8;
  int max_iterations = 200;
};

/// Iterates alpha <- map(alpha) from 1/(M rho beta).
inline AlphaResult prop1_alpha(const Scenario& s, const HomogeneousOptions& opt = {}) {
  const HomogeneousSystem h(s);
  AlphaResult res;
  res.method = AlphaMethod::prop1_fixed_point;
  double alpha = 1.0 / (h.M() * h.rho() * h.beta());
  res.trajectory.push_back(alpha);
  for (int it = 1; it <= opt.max_iterations; ++it) {
    const double next = h.optimality_map(h.state(alpha));
    if (!(next > 0.0) || !std::isfinite(next)) {
      std::ostringstream os;
      os << "optimality fixed point left the positive axis at iteration " << it;
      throw ConvergenceError(os.str());
    }
    res.trajectory.push_back(next);
    const double change = std::abs(next - alpha) / alpha;
    alpha = next;
    if (change < opt.tolerance) {
      res.alpha_opt = alpha;
      res.iterations = it;
      res.objective = s.K * std::log1p(h.gamma(h.state(alpha)));
      res.bracket = {alpha, alpha};
      return res;
    }
  }
  std::ostringstream os;
  os << "optimality fixed point did not converge in " << opt.max_iterations
     << " iterations; trajectory tail:";
  const auto& tr = res.trajectory;
  for (std::size_t p = tr.size() > 5 ? tr.size() - 5 : 0; p < tr.size(); ++p) os << ' ' << tr[p];
  throw ConvergenceError(os.str());
}

/// Special-case closed forms: T = I homogeneous (perfect CSIT reduces to
/// 1/(M rho beta)); otherwise single-cell homogeneous via the fixed-point
/// equation with M = 1.
inline AlphaResult closed_form_alpha(const Scenario& s) {
  AlphaResult res;
  if (is_homogeneous(s) && has_identity_correlation(s)) {
    const HomogeneousSystem h(s);
    const bool perfect = (s.tau2.array() == 0.0).all();
    res.method = perfect ? AlphaMethod::closed_form_perfect : AlphaMethod::closed_form_uncorrelated;
    res.alpha_opt = perfect ? 1.0 / (s.M * s.rho * h.beta())
                            : alpha_uncorrelated(s.M, s.rho, h.beta(), h.psi_avg());
    res.objective = det_sum_rate(s, res.alpha_opt);
    res.bracket = {res.alpha_opt, res.alpha_opt};
    return res;
  }
  if (s.M == 1 && is_homogeneous(s)) {
    res = prop1_alpha(s);
    res.method = AlphaMethod::closed_form_single_cell;
    return res;
  }
  throw InvalidScenario("no closed form applies: need T = I homogeneous or a single homogeneous cell");
}

/// Best available optimizer: closed form when it applies, otherwise golden
/// section with the given options.
inline AlphaResult optimal_alpha(const Scenario& s, const GoldenOptions& opt = {}) {
  if (is_homogeneous(s) && has_identity_correlation(s)) return closed_form_alpha(s);
  return golden_section_alpha(s, opt);
}

}  // namespace rzf

#endif  // RZF_REGOPT_HPP
