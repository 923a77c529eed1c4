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

#ifndef RZF_MONTECARLO_HPP
#define RZF_MONTECARLO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <thread>
#include <vector>

#include "rzf/common.hpp"
#include "rzf/det_sinr.hpp"
#include "rzf/linalg.hpp"
#include "rzf/parallel.hpp"
#include "rzf/random.hpp"
#include "rzf/scenario.hpp"

namespace rzf {

/// One draw of the channel and its transmitter-side estimate. Row k of x
/// and v holds x_k^H and v_k^H; row k of H is h_k^H and of Hhat is
/// hhat_k^H.
struct ChannelRealization {
  CMatrix x, v;  // K x N
  CMatrix H, Hhat;
  std::uint64_t seed = 0;
};

/// Caches T_{k,i}^{1/2} for repeated draws from one scenario.
class ChannelSampler {
 public:
  explicit ChannelSampler(const Scenario& s) : s_(&s) {
    roots_.reserve(s.corr.size());
    for (const auto& t : s.corr) roots_.push_back(linalg::hermitian_sqrt(t));
  }

  const Scenario& scenario() const { return *s_; }
  const CMatrix& root(int k, int i) const {
    return roots_[static_cast<std::size_t>(k) * s_->M + i];
  }

  /// Builds H and Hhat from given inner vectors.
  ChannelRealization assemble(CMatrix x, CMatrix v, std::uint64_t seed = 0) const {
    const Scenario& s = *s_;
    ChannelRealization ch;
    ch.seed = seed;
    const int n = s.total_antennas();
    ch.H.resize(s.K, n);
    ch.Hhat.resize(s.K, n);
    for (int i = 0; i < s.M; ++i) {
      const int o = s.offset(i), ni = s.N[i];
      for (int k = 0; k < s.K; ++k) {
        const CMatrix& r = root(k, i);
        const double psi = s.psi(k, i);
        const double tau = std::sqrt(s.tau2(k, i));
        const Eigen::RowVectorXcd xb = x.block(k, o, 1, ni);
        const Eigen::RowVectorXcd mixed = psi * xb + tau * v.block(k, o, 1, ni);
        ch.H.block(k, o, 1, ni) = xb * r;
        ch.Hhat.block(k, o, 1, ni) = mixed * r;
      }
    }
    ch.x = std::move(x);
    ch.v = std::move(v);
    return ch;
  }

  /// Entries of block i are CN(0, 1/N_i); x then v, row by row.
  ChannelRealization draw(std::uint64_t seed) const {
    Engine eng = make_engine(seed);
    return draw(eng, seed);
  }

  ChannelRealization draw(Engine& eng, std::uint64_t seed = 0) const {
    const Scenario& s = *s_;
    const int n = s.total_antennas();
    CMatrix x = complex_gaussian(eng, s.K, n, 1.0);
    CMatrix v = complex_gaussian(eng, s.K, n, 1.0);
    for (int i = 0; i < s.M; ++i) {
      const double scale = 1.0 / std::sqrt(static_cast<double>(s.N[i]));
      x.middleCols(s.offset(i), s.N[i]) *= scale;
      v.middleCols(s.offset(i), s.N[i]) *= scale;
    }
    return assemble(std::move(x), std::move(v), seed);
  }

 private:
  const Scenario* s_;
  std::vector<CMatrix> roots_;
};

inline ChannelRealization draw_channels(const Scenario& s, std::uint64_t seed) {
  return ChannelSampler(s).draw(seed);
}

/// RZF precoder G = xi What Hhat^H under per-BS power N_i P with P = 1.
struct PrecoderState {
  std::optional<CMatrix> What;  // (Hhat^H Hhat + alpha I)^{-1}, on request
  CMatrix G_unnorm;             // What Hhat^H, N x K
  RVector Phi;                  // (1/N) tr(E_i What Hhat^H Hhat What^H E_i)
  double xi2 = 0.0;             // min_i xi_i^2
  double nu = 0.0;              // max_i N Phi_i / (N_i rho)
  int binding_bs = 0;
  RVector bs_power;             // tr(E_i G G^H E_i) after normalization
};

inline PrecoderState rzf_precoder(const Scenario& s, const ChannelRealization& ch,
                                  double alpha, bool keep_inverse = false) {
  if (!(alpha > 0.0)) throw Error("RZF regularization must be positive");
  const int n = s.total_antennas();
  CMatrix a = ch.Hhat.adjoint() * ch.Hhat;
  a.diagonal().array() += alpha;
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) throw SingularSystem("Hhat^H Hhat + alpha I is singular");

  PrecoderState ps;
  ps.G_unnorm = llt.solve(ch.Hhat.adjoint());
  if (keep_inverse) ps.What = linalg::hermitian_part(llt.solve(CMatrix::Identity(n, n)));
  ps.Phi.resize(s.M);
  ps.bs_power.resize(s.M);
  double xi2 = std::numeric_limits<double>::infinity();
  for (int i = 0; i < s.M; ++i) {
    ps.Phi(i) = ps.G_unnorm.middleRows(s.offset(i), s.N[i]).squaredNorm() / n;
    const double xi2_i = (static_cast<double>(s.N[i]) / n) / ps.Phi(i);
    if (xi2_i < xi2) {
      xi2 = xi2_i;
      ps.binding_bs = i;
    }
  }
  ps.xi2 = xi2;
  ps.nu = 0.0;
  for (int i = 0; i < s.M; ++i) {
    ps.nu = std::max(ps.nu, n * ps.Phi(i) / (s.N[i] * s.rho));
    ps.bs_power(i) = xi2 * n * ps.Phi(i);
  }
  return ps;
}

/// gamma_k = |h_k^H What hhat_k|^2 / (sum_{l != k} |h_k^H What hhat_l|^2 + nu).
inline RVector instant_sinr(const Scenario& s, const ChannelRealization& ch,
                            const PrecoderState& ps) {
  const CMatrix hg = ch.H * ps.G_unnorm;  // K x K
  RVector g(s.K);
  for (int k = 0; k < s.K; ++k) {
    const double signal = std::norm(hg(k, k));
    const double interference = hg.row(k).squaredNorm() - signal;
    g(k) = signal / (std::max(interference, 0.0) + ps.nu);
  }
  return g;
}

/// Worst relative excess of any BS power over N_i P, and distance of the
/// binding BS from equality.
struct PowerCheck {
  double max_excess = 0.0;
  double binding_gap = 0.0;
  bool ok(double tol = 1e-9) const { return max_excess <= tol && binding_gap <= tol; }
};

inline PowerCheck check_power(const Scenario& s, const PrecoderState& ps) {
  PowerCheck pc;
  for (int i = 0; i < s.M; ++i) {
    const double budget = s.N[i];
    pc.max_excess = std::max(pc.max_excess, ps.bs_power(i) / budget - 1.0);
  }
  pc.binding_gap = std::abs(ps.bs_power(ps.binding_bs) / s.N[ps.binding_bs] - 1.0);
  return pc;
}

struct McOptions {
  unsigned workers = 0;  // 0: hardware concurrency
  bool keep_samples = false;
};

struct ErgodicEstimate {
  double mean_nats = 0.0;
  double std_error_nats = 0.0;
  std::size_t trials = 0;
  std::vector<double> samples;  // per-trial sum-rates, if requested
  std::size_t power_violations = 0;
  double worst_power_deviation = 0.0;
};

namespace detail {

struct TrialResult {
  double rate = 0.0;
  PowerCheck power;
};

}  // namespace detail

/// Monte-Carlo ergodic sum-rate (nats). Trial t uses seed
/// derive_seed(master_seed, t), so the first n trials are the same for any
/// total count and any worker count.
inline ErgodicEstimate ergodic_sum_rate(const Scenario& s, double alpha, std::size_t trials,
                                        std::uint64_t master_seed, const McOptions& opt = {}) {
  if (trials < 1) throw Error("at least one Monte-Carlo trial is required");
  const ChannelSampler sampler(s);
  auto results = detail::parallel_map(trials, opt.workers, [&](std::size_t t) {
    const auto ch = sampler.draw(derive_seed(master_seed, t));
    const auto ps = rzf_precoder(s, ch, alpha);
    const RVector g = instant_sinr(s, ch, ps);
    detail::TrialResult r;
    for (Eigen::Index k = 0; k < g.size(); ++k) r.rate += std::log1p(g(k));
    r.power = check_power(s, ps);
    return r;
  });
  ErgodicEstimate est;
  est.trials = trials;
  std::vector<double> rates;
  rates.reserve(trials);
  for (const auto& r : results) {
    rates.push_back(r.rate);
    if (!r.power.ok()) ++est.power_violations;
    est.worst_power_deviation =
        std::max({est.worst_power_deviation, r.power.max_excess, r.power.binding_gap});
  }
  const MeanStderr ms = mean_stderr(rates);
  est.mean_nats = ms.mean;
  est.std_error_nats = ms.std_error;
  if (opt.keep_samples) est.samples = std::move(rates);
  return est;
}

/// (1/N) tr(Q (Hhat^H Hhat + alpha I)^{-1}) for one realization.
inline double empirical_stieltjes(const ChannelRealization& ch, const CMatrix& q, double alpha) {
  const Eigen::Index n = ch.Hhat.cols();
  CMatrix a = ch.Hhat.adjoint() * ch.Hhat;
  a.diagonal().array() += alpha;
  Eigen::LLT<CMatrix> llt(a);
  const CMatrix sol = llt.solve(q);
  return sol.trace().real() / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Rank-one perturbation identity used for the interference term:
// for A = D + (Lambda x + Omega v)(Lambda x + Omega v)^H,
//   x^H U A^{-1} V x -> (1/N)tr(V U D^-1) - a b / (1 + l + o)
//   x^H U A^{-1} V v -> -a w / (1 + l + o)
// with a = (1/N)tr(Lambda U D^-1), b = (1/N)tr(V Lambda^H D^-1),
// w = (1/N)tr(V Omega^H D^-1), l = (1/N)tr(Lambda Lambda^H D^-1),
// o = (1/N)tr(Omega Omega^H D^-1).
// ---------------------------------------------------------------------------

struct BilinearForms {
  Complex xx, xx_limit;
  Complex xv, xv_limit;
};

inline BilinearForms bilinear_forms(const CMatrix& d_inv, const CMatrix& u, const CMatrix& v_mat,
                                     const CMatrix& lambda, const CMatrix& omega,
                                     const CVector& x, const CVector& v) {
  const double n = static_cast<double>(d_inv.rows());
  const CVector q = lambda * x + omega * v;
  // A^{-1} = D^{-1} - D^{-1} q q^H D^{-1} / (1 + q^H D^{-1} q)
  const CVector dq = d_inv * q;
  const Complex denom_emp = 1.0 + q.dot(dq);
  auto apply_inverse = [&](const CVector& y) -> CVector {
    const CVector dy = d_inv * y;
    return dy - dq * (dq.dot(y) / denom_emp);
  };
  BilinearForms b;
  const CVector vx = v_mat * x;
  const CVector vv = v_mat * v;
  const CVector uhx = u.adjoint() * x;
  b.xx = uhx.dot(apply_inverse(vx));
  b.xv = uhx.dot(apply_inverse(vv));

  auto ntr = [n](const CMatrix& m) { return m.trace() / n; };
  const Complex a = ntr(lambda * u * d_inv);
  const Complex bb = ntr(v_mat * lambda.adjoint() * d_inv);
  const Complex w = ntr(v_mat * omega.adjoint() * d_inv);
  const Complex l = ntr(lambda * lambda.adjoint() * d_inv);
  const Complex o = ntr(omega * omega.adjoint() * d_inv);
  const Complex den = 1.0 + l + o;
  b.xx_limit = ntr(v_mat * u * d_inv) - a * bb / den;
  b.xv_limit = -a * w / den;
  return b;
}

struct TermResidual {
  double mean = 0.0;
  double std_error = 0.0;
  double mean_abs = 0.0;
  bool within(double sigmas) const { return std::abs(mean) <= sigmas * std_error; }
};

/// Empirical residuals of the large-system limits for the tagged user
/// k = 0, one sample per draw.
struct ResidualReport {
  TermResidual noise;         // nu - nu_bar
  TermResidual signal;        // Re h^H What hhat - u2 / (1 + u1)
  TermResidual interference;  // h^H What Hhat_[k]^H Hhat_[k] What h - uk
  TermResidual bilinear_xx;   // x^H U A^-1 V x - limit
  TermResidual bilinear_xv;   // Re x^H U A^-1 V v - limit
  std::size_t trials = 0;
  std::size_t power_violations = 0;
  double worst_power_deviation = 0.0;
};

struct ResidualOptions {
  bool zero_perturbation = false;  // Lambda = Omega = 0 in the bilinear check
  unsigned workers = 0;
};

namespace detail {

inline TermResidual summarize(const std::vector<double>& xs) {
  TermResidual r;
  const MeanStderr ms = mean_stderr(xs);
  r.mean = ms.mean;
  r.std_error = ms.std_error;
  CompensatedSum a;
  for (double x : xs) a.add(std::abs(x));
  r.mean_abs = xs.empty() ? 0.0 : a.value() / static_cast<double>(xs.size());
  return r;
}

}  // namespace detail

inline ResidualReport validate_appendix_terms(const Scenario& s, double alpha, std::size_t trials,
                                              std::uint64_t master_seed,
                                              const ResidualOptions& opt = {}) {
  if (trials < 1) throw Error("at least one draw is required");
  const DetEquivalent det = deterministic_equivalent(s, alpha);
  const ChannelSampler sampler(s);
  const int n = s.total_antennas();
  const int k0 = 0;

  // Block-diagonal T_0^{1/2} and the CSIT weights of the tagged user.
  CMatrix root = CMatrix::Zero(n, n);
  for (int i = 0; i < s.M; ++i) {
    root.block(s.offset(i), s.offset(i), s.N[i], s.N[i]) = sampler.root(k0, i);
  }
  const CsitDecomposition cd = csit_decomposition(s);
  CMatrix lambda = root * cd.lambda_diag[k0].cast<Complex>().asDiagonal();
  CMatrix omega = root * cd.omega_diag[k0].cast<Complex>().asDiagonal();
  if (opt.zero_perturbation) {
    lambda.setZero();
    omega.setZero();
  }

  struct Sample {
    double noise, signal, interference, xx, xv;
    PowerCheck power;
  };
  auto samples = detail::parallel_map(trials, opt.workers, [&](std::size_t t) {
    const std::uint64_t seed = derive_seed(master_seed, t);
    Engine eng = make_engine(seed);
    const ChannelRealization ch = sampler.draw(eng, seed);
    const PrecoderState ps = rzf_precoder(s, ch, alpha, true);
    const CMatrix& w = *ps.What;
    Sample out{};
    out.noise = ps.nu - det.nu_bar;
    out.power = check_power(s, ps);

    const CVector h = ch.H.row(k0).adjoint();
    const CVector hh = ch.Hhat.row(k0).adjoint();
    const CVector wh = w * h;
    out.signal = wh.dot(hh).real() - det.u2(k0) / (1.0 + det.u1(k0));
    double interf = 0.0;
    const CVector proj = ch.Hhat * wh;  // hhat_l^H What h
    for (int l = 0; l < s.K; ++l) {
      if (l != k0) interf += std::norm(proj(l));
    }
    out.interference = interf - det.uk(k0);

    // D = A_[k0]; fresh x, v with CN(0, 1/N) entries.
    CMatrix a_k = ch.Hhat.adjoint() * ch.Hhat - hh * hh.adjoint();
    a_k.diagonal().array() += alpha;
    const CMatrix d_inv = linalg::hpd_inverse(a_k);
    const CVector xl = complex_gaussian(eng, n, 1, 1.0 / n);
    const CVector vl = complex_gaussian(eng, n, 1, 1.0 / n);
    const BilinearForms bf = bilinear_forms(d_inv, root, root, lambda, omega, xl, vl);
    out.xx = (bf.xx - bf.xx_limit).real();
    out.xv = (bf.xv - bf.xv_limit).real();
    return out;
  });

  ResidualReport r;
  std::vector<double> a, b, c, d1, d2;
  for (const auto& x : samples) {
    if (!x.power.ok()) ++r.power_violations;
    r.worst_power_deviation =
        std::max({r.worst_power_deviation, x.power.max_excess, x.power.binding_gap});
    a.push_back(x.noise);
    b.push_back(x.signal);
    c.push_back(x.interference);
    d1.push_back(x.xx);
    d2.push_back(x.xv);
  }
  r.trials = trials;
  r.noise = detail::summarize(a);
  r.signal = detail::summarize(b);
  r.interference = detail::summarize(c);
  r.bilinear_xx = detail::summarize(d1);
  r.bilinear_xv = detail::summarize(d2);
  return r;
}

}  // namespace rzf

#endif  // RZF_MONTECARLO_HPP
