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

#ifndef RZF_RMT_CORE_HPP
#define RZF_RMT_CORE_HPP

#include <cmath>
#include <string>
#include <vector>

#include "rzf/common.hpp"
#include "rzf/linalg.hpp"
#include "rzf/scenario.hpp"

namespace rzf {

// Deterministic equivalents of the resolvent (Hhat^H Hhat + alpha I)^{-1}.
//
// For each BS i
//
//   Psi_i = ( (1/N_i) sum_k c_k T_{k,i} + alpha I )^{-1},
//   c_k   = 1 / (1 + sum_m e_{k,m}),
//   e_{k,i} = (1/N_i) tr(T_{k,i} Psi_i).
//
// The K x M unknowns e are stored column-major, so vec(e) index of (k, i)
// is i * K + k.

struct FixedPointOptions {
  double tolerance = 1e-12;  // on max |F(e) - e| / (1 + |e|)
  int max_iterations = 500;
  // Plain Picard sweeps before Newton acceleration is tried.
  int picard_warmup = 3;
  bool newton = true;
};

struct FixedPointSolution {
  double alpha = 0.0;
  RMatrix e;                 // K x M
  std::vector<CMatrix> Psi;  // M blocks, N_i x N_i
  int iterations = 0;
  double residual = 0.0;
  int newton_steps = 0;
  bool damped = false;

  /// c_k = 1 / (1 + sum_m e_{k,m}).
  RVector user_weights() const {
    RVector c(e.rows());
    for (Eigen::Index k = 0; k < e.rows(); ++k) c(k) = 1.0 / (1.0 + e.row(k).sum());
    return c;
  }
};

namespace detail {

inline std::vector<CMatrix> psi_blocks(const Scenario& s, const RMatrix& e, double alpha) {
  std::vector<CMatrix> psi;
  psi.reserve(static_cast<std::size_t>(s.M));
  for (int i = 0; i < s.M; ++i) {
    CMatrix a = CMatrix::Identity(s.N[i], s.N[i]) * alpha;
    for (int k = 0; k < s.K; ++k) {
      const double c = 1.0 / (1.0 + e.row(k).sum());
      a += (c / s.N[i]) * s.T(k, i);
    }
    psi.push_back(linalg::hpd_inverse(a));
  }
  return psi;
}

inline RMatrix trace_map(const Scenario& s, const std::vector<CMatrix>& psi) {
  RMatrix f(s.K, s.M);
  for (int i = 0; i < s.M; ++i) {
    for (int k = 0; k < s.K; ++k) {
      f(k, i) = linalg::trace_of_product(s.T(k, i), psi[i]).real() / s.N[i];
    }
  }
  return f;
}

inline double relative_change(const RMatrix& next, const RMatrix& cur) {
  if (cur.size() == 0) return 0.0;
  return ((next - cur).array().abs() / (1.0 + cur.array().abs())).maxCoeff();
}

/// X(k, l) = tr(T_{k,i} Psi_i T_{l,i} Psi_i), all pairs, one GEMM.
inline RMatrix cross_traces(const Scenario& s, int i, const CMatrix& psi) {
  const Eigen::Index n2 = static_cast<Eigen::Index>(s.N[i]) * s.N[i];
  CMatrix left(s.K, n2), right(s.K, n2);
  for (int k = 0; k < s.K; ++k) {
    CMatrix p = s.T(k, i) * psi;
    left.row(k) = Eigen::Map<const CVector>(p.data(), n2).transpose();
    CMatrix pt = p.transpose();
    right.row(k) = Eigen::Map<const CVector>(pt.data(), n2).transpose();
  }
  return (left * right.transpose()).real();
}

/// Jacobian of e -> F(e); independent of the column index m.
inline RMatrix fixed_point_jacobian(const Scenario& s, const RMatrix& e,
                                    const std::vector<CMatrix>& psi) {
  const Eigen::Index n = static_cast<Eigen::Index>(s.K) * s.M;
  RMatrix jac = RMatrix::Zero(n, n);
  RVector c2(s.K);
  for (int k = 0; k < s.K; ++k) {
    const double c = 1.0 / (1.0 + e.row(k).sum());
    c2(k) = c * c;
  }
  for (int i = 0; i < s.M; ++i) {
    const RMatrix x = cross_traces(s, i, psi[i]);
    const double scale = 1.0 / (static_cast<double>(s.N[i]) * s.N[i]);
    for (int k = 0; k < s.K; ++k) {
      for (int l = 0; l < s.K; ++l) {
        const double v = scale * c2(l) * x(k, l);
        for (int m = 0; m < s.M; ++m) {
          jac(static_cast<Eigen::Index>(i) * s.K + k, static_cast<Eigen::Index>(m) * s.K + l) = v;
        }
      }
    }
  }
  return jac;
}

}  // namespace detail

/// Solves the coupled e / Psi system for one regularization value.
///
/// Picard sweeps from e = 1; once past the warm-up a Newton step on
/// e - F(e) = 0 is proposed each sweep and kept only if it stays positive
/// and lowers the residual. Damping 0.5 is switched on after two
/// consecutive residual increases.
inline FixedPointSolution solve_fixed_point(const Scenario& s, double alpha,
                                            const FixedPointOptions& opt = {}) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw ConvergenceError("regularization alpha must be positive and finite");
  }
  FixedPointSolution sol;
  sol.alpha = alpha;
  RMatrix e = RMatrix::Ones(s.K, s.M);
  std::vector<CMatrix> psi = detail::psi_blocks(s, e, alpha);
  RMatrix f = detail::trace_map(s, psi);
  double res = detail::relative_change(f, e);
  double damping = 1.0;
  int increases = 0;

  int it = 0;
  while (res >= opt.tolerance) {
    if (it >= opt.max_iterations) {
      throw ConvergenceError("fixed point did not converge in " +
                             std::to_string(opt.max_iterations) +
                             " iterations (alpha = " + std::to_string(alpha) +
                             ", residual = " + std::to_string(res) + ")");
    }
    ++it;
    RMatrix next;
    bool newton_ok = false;
    if (opt.newton && it > opt.picard_warmup) {
      const Eigen::Index n = e.size();
      RMatrix sys = RMatrix::Identity(n, n) - detail::fixed_point_jacobian(s, e, psi);
      Eigen::PartialPivLU<RMatrix> lu(sys);
      RVector rhs = Eigen::Map<const RVector>(f.data(), n) - Eigen::Map<const RVector>(e.data(), n);
      RVector step = lu.solve(rhs);
      if (step.allFinite()) {
        RMatrix cand = e + Eigen::Map<const RMatrix>(step.data(), s.K, s.M);
        if ((cand.array() > 0.0).all()) {
          auto cpsi = detail::psi_blocks(s, cand, alpha);
          RMatrix cf = detail::trace_map(s, cpsi);
          const double cres = detail::relative_change(cf, cand);
          if (cres < res) {
            e = std::move(cand);
            psi = std::move(cpsi);
            f = std::move(cf);
            res = cres;
            newton_ok = true;
            ++sol.newton_steps;
            increases = 0;
          }
        }
      }
    }
    if (newton_ok) continue;

    next = e + damping * (f - e);
    psi = detail::psi_blocks(s, next, alpha);
    RMatrix nf = detail::trace_map(s, psi);
    const double nres = detail::relative_change(nf, next);
    increases = nres > res ? increases + 1 : 0;
    if (increases >= 2 && damping == 1.0) {
      damping = 0.5;
      sol.damped = true;
    }
    e = std::move(next);
    f = std::move(nf);
    res = nres;
  }
  sol.e = std::move(e);
  sol.Psi = std::move(psi);
  sol.iterations = it;
  sol.residual = res;
  return sol;
}

/// Every trace of Psi_i that the deterministic SINR needs. Note that
/// tr(Psi_i T_{k,i} Psi_i) = tr(T_{k,i} Psi_i^2), so one array serves both.
struct DerivedTraces {
  RMatrix tr_T_psi;            // K x M, tr(T_{k,i} Psi_i)
  RMatrix tr_T_psi2;           // K x M, tr(T_{k,i} Psi_i^2)
  std::vector<RMatrix> cross;  // per i, K x K, tr(T_{k,i} Psi_i T_{l,i} Psi_i)
  RVector tr_psi;              // M, tr(Psi_i)
  RVector tr_psi2;             // M, tr(Psi_i^2)
  double max_imag_residue = 0.0;
};

inline DerivedTraces derived_traces(const Scenario& s, const FixedPointSolution& fp) {
  DerivedTraces d;
  d.tr_T_psi.resize(s.K, s.M);
  d.tr_T_psi2.resize(s.K, s.M);
  d.tr_psi.resize(s.M);
  d.tr_psi2.resize(s.M);
  auto take = [&d](Complex z) {
    d.max_imag_residue = std::max(d.max_imag_residue, std::abs(z.imag()));
    return z.real();
  };
  for (int i = 0; i < s.M; ++i) {
    const CMatrix& psi = fp.Psi[i];
    const CMatrix psi2 = psi * psi;
    d.tr_psi(i) = take(psi.trace());
    d.tr_psi2(i) = take(psi2.trace());
    for (int k = 0; k < s.K; ++k) {
      d.tr_T_psi(k, i) = take(linalg::trace_of_product(s.T(k, i), psi));
      d.tr_T_psi2(k, i) = take(linalg::trace_of_product(s.T(k, i), psi2));
    }
    d.cross.push_back(detail::cross_traces(s, i, psi));
  }
  return d;
}

struct DotCSolution {
  RMatrix dotc;  // K x M
  double theta_cond = 1.0;
  double residual = 0.0;  // ||Theta vec(C) - vec(Gamma)|| / ||vec(Gamma)||
};

/// Assembles Theta and Gamma (row and column index (k, i) -> i * K + k).
inline void dotc_system(const Scenario& s, const FixedPointSolution& fp,
                        const DerivedTraces& tr, RMatrix& theta, RVector& gamma) {
  const Eigen::Index n = static_cast<Eigen::Index>(s.K) * s.M;
  const RVector c = fp.user_weights();
  theta = RMatrix::Identity(n, n);
  gamma = RVector::Zero(n);
  for (int k = 0; k < s.K; ++k) {
    const double c2 = c(k) * c(k);
    double g = 0.0;
    for (int j = 0; j < s.M; ++j) g += tr.tr_T_psi2(k, j) / s.N[j];
    for (int i = 0; i < s.M; ++i) {
      const Eigen::Index row = static_cast<Eigen::Index>(i) * s.K + k;
      gamma(row) = -c2 * g / s.N[i];
      for (int j = 0; j < s.M; ++j) {
        const double scale = c2 / (static_cast<double>(s.N[i]) * s.N[j]);
        for (int l = 0; l < s.K; ++l) {
          theta(row, static_cast<Eigen::Index>(j) * s.K + l) -= scale * tr.cross[j](k, l);
        }
      }
    }
  }
}

/// Solves Theta vec(C) = vec(Gamma) by LU with partial pivoting.
inline DotCSolution solve_dotc(const Scenario& s, const FixedPointSolution& fp,
                               const DerivedTraces& tr) {
  DotCSolution out;
  out.dotc = RMatrix::Zero(s.K, s.M);
  if (s.K == 0) return out;
  RMatrix theta;
  RVector gamma;
  dotc_system(s, fp, tr, theta, gamma);
  Eigen::PartialPivLU<RMatrix> lu(theta);
  const double rcond = lu.rcond();
  if (!(rcond > 1e-14)) {
    throw SingularSystem("Theta is singular or numerically rank deficient (rcond = " +
                         std::to_string(rcond) + ")");
  }
  RVector x = lu.solve(gamma);
  const double gnorm = gamma.norm();
  out.residual = gnorm > 0.0 ? (theta * x - gamma).norm() / gnorm : (theta * x).norm();
  out.theta_cond = 1.0 / rcond;
  out.dotc = Eigen::Map<const RMatrix>(x.data(), s.K, s.M);
  return out;
}

inline DotCSolution solve_dotc(const Scenario& s, const FixedPointSolution& fp) {
  return solve_dotc(s, fp, derived_traces(s, fp));
}

/// (1/N) tr(Q diag(Psi_1, ..., Psi_M)) for an N x N weight Q.
inline double det_stieltjes(const Scenario& s, const CMatrix& q, const FixedPointSolution& fp) {
  const int n = s.total_antennas();
  if (q.rows() != n || q.cols() != n) {
    throw InvalidScenario("weight matrix must be N x N with N = sum N_i");
  }
  Complex acc = 0.0;
  for (int i = 0; i < s.M; ++i) {
    const int o = s.offset(i);
    acc += linalg::trace_of_product(q.block(o, o, s.N[i], s.N[i]), fp.Psi[i]);
  }
  return acc.real() / n;
}

inline double det_stieltjes(const Scenario& s, const CMatrix& q, double alpha,
                            const FixedPointOptions& opt = {}) {
  return det_stieltjes(s, q, solve_fixed_point(s, alpha, opt));
}

/// Block selector E_i: identity on the antennas of BS i, zero elsewhere.
inline CMatrix bs_selector(const Scenario& s, int i) {
  const int n = s.total_antennas();
  CMatrix e = CMatrix::Zero(n, n);
  e.block(s.offset(i), s.offset(i), s.N[i], s.N[i]).setIdentity();
  return e;
}

}  // namespace rzf

#endif  // RZF_RMT_CORE_HPP
