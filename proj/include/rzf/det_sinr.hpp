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

#ifndef RZF_DET_SINR_HPP
#define RZF_DET_SINR_HPP

#include <cmath>
#include <string>

#include "rzf/common.hpp"
#include "rzf/rmt_core.hpp"
#include "rzf/scenario.hpp"

namespace rzf {

/// Large-system SINR terms. Derivative terms carry the sign convention
/// du = -d(u)/d(alpha), which makes them nonnegative.
struct DetEquivalent {
  double alpha = 0.0;
  RVector u1, u2;    // sum_i (w_{k,i} / N_i) tr(T_{k,i} Psi_i), w = 1 or psi
  RVector du1, du2;  // derivative terms
  RVector uk;        // interference
  RVector nu_terms;  // per-BS noise terms; nu_bar is their max
  double nu_bar = 0.0;
  int binding_bs = 0;
  RVector gamma_bar;
  double sum_rate_nats = 0.0;
  int clamped = 0;  // gamma values within 1e-12 below zero set to zero
};

/// Fills u1, u2, du1, du2, uk and nu_bar. gamma_bar is left empty.
inline DetEquivalent compute_u_terms(const Scenario& s, const FixedPointSolution& fp,
                                     const DotCSolution& dc, const DerivedTraces& tr) {
  const double alpha = fp.alpha;
  DetEquivalent d;
  d.alpha = alpha;
  d.u1 = RVector::Zero(s.K);
  d.u2 = RVector::Zero(s.K);
  d.du1 = RVector::Zero(s.K);
  d.du2 = RVector::Zero(s.K);
  d.uk = RVector::Zero(s.K);
  d.nu_terms = RVector::Zero(s.M);

  for (int i = 0; i < s.M; ++i) {
    const double ni = s.N[i];
    for (int k = 0; k < s.K; ++k) {
      const double e = tr.tr_T_psi(k, i) / ni;
      double cross = 0.0;
      for (int l = 0; l < s.K; ++l) cross += dc.dotc(l, i) * tr.cross[i](k, l);
      const double de = (tr.tr_T_psi2(k, i) - cross) / ni;
      const double w = s.psi(k, i);
      d.u1(k) += e;
      d.u2(k) += w * e;
      d.du1(k) += de;
      d.du2(k) += w * de;
    }
    double acc = 0.0;
    for (int k = 0; k < s.K; ++k) acc += dc.dotc(k, i) * tr.tr_T_psi2(k, i);
    d.nu_terms(i) = (tr.tr_psi(i) - alpha * tr.tr_psi2(i) + alpha * acc) / (ni * s.rho);
  }
  // First maximum wins ties.
  d.binding_bs = 0;
  for (int i = 1; i < s.M; ++i) {
    if (d.nu_terms(i) > d.nu_terms(d.binding_bs)) d.binding_bs = i;
  }
  d.nu_bar = d.nu_terms(d.binding_bs);

  for (int k = 0; k < s.K; ++k) {
    const double u1 = d.u1(k), u2 = d.u2(k);
    const double a1 = u1 - alpha * d.du1(k);
    const double a2 = u2 - alpha * d.du2(k);
    const double den = 1.0 + u1;
    d.uk(k) = a1 - 2.0 * u2 * a2 / den + u2 * u2 * a1 / (den * den);
  }
  return d;
}

/// gamma_k = u2^2 / ((1 + u1)^2 (uk + nu_bar)); fills det.gamma_bar.
inline const RVector& gamma_bar(const Scenario& s, DetEquivalent& det) {
  det.gamma_bar = RVector::Zero(s.K);
  det.clamped = 0;
  for (int k = 0; k < s.K; ++k) {
    const double den = (1.0 + det.u1(k)) * (1.0 + det.u1(k)) * (det.uk(k) + det.nu_bar);
    if (!(den > 0.0)) {
      throw Error("nonpositive SINR denominator for user " + std::to_string(k) +
                  "; upstream solution is invalid");
    }
    double g = det.u2(k) * det.u2(k) / den;
    if (g < 0.0 && g > -1e-12) {
      g = 0.0;
      ++det.clamped;
    }
    det.gamma_bar(k) = g;
  }
  return det.gamma_bar;
}

/// Perfect-CSIT closed form u1^2 / ((u1 - alpha du1) + (1 + u1)^2 nu_bar).
inline RVector gamma_bar_perfect(const Scenario& s, const FixedPointSolution& fp,
                                 const DotCSolution& dc, const DerivedTraces& tr) {
  if ((s.tau2.array() != 0.0).any()) {
    throw InvalidScenario("perfect-CSIT SINR requested for a scenario with tau2 != 0");
  }
  const DetEquivalent d = compute_u_terms(s, fp, dc, tr);
  RVector g(s.K);
  for (int k = 0; k < s.K; ++k) {
    const double u1 = d.u1(k);
    g(k) = u1 * u1 / ((u1 - fp.alpha * d.du1(k)) + (1.0 + u1) * (1.0 + u1) * d.nu_bar);
  }
  return g;
}

/// sum_k log(1 + gamma_k) in nats.
inline double sum_rate_bar(const DetEquivalent& det) {
  double r = 0.0;
  for (Eigen::Index k = 0; k < det.gamma_bar.size(); ++k) r += std::log1p(det.gamma_bar(k));
  return r;
}

/// Whole pipeline at one alpha: fixed point, traces, C-dot, u terms, SINRs,
/// sum-rate.
inline DetEquivalent deterministic_equivalent(const Scenario& s, double alpha,
                                              const FixedPointOptions& opt = {}) {
  const FixedPointSolution fp = solve_fixed_point(s, alpha, opt);
  const DerivedTraces tr = derived_traces(s, fp);
  const DotCSolution dc = solve_dotc(s, fp, tr);
  DetEquivalent d = compute_u_terms(s, fp, dc, tr);
  gamma_bar(s, d);
  d.sum_rate_nats = sum_rate_bar(d);
  return d;
}

inline double det_sum_rate(const Scenario& s, double alpha, const FixedPointOptions& opt = {}) {
  return deterministic_equivalent(s, alpha, opt).sum_rate_nats;
}

}  // namespace rzf

#endif  // RZF_DET_SINR_HPP
