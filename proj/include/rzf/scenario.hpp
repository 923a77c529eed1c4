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

#ifndef RZF_SCENARIO_HPP
#define RZF_SCENARIO_HPP

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "rzf/common.hpp"
#include "rzf/linalg.hpp"
#include "rzf/random.hpp"

namespace rzf {

/// Cooperative downlink system: M base stations with N_i antennas each,
/// K single-antenna users, per-antenna SNR rho = P / sigma^2, per-link
/// correlation T_{k,i} (path gain folded in) and CSIT error power tau2_{k,i}.
///
/// Build with make_scenario() or build_scenario(); the result is treated as
/// immutable and can be shared between threads.
struct Scenario {
  int M = 0;
  std::vector<int> N;
  int K = 0;
  double rho = 1.0;
  std::vector<CMatrix> corr;  // row-major over (k, i): corr[k * M + i]
  RMatrix tau2;               // K x M
  RMatrix psi;                // sqrt(1 - tau2)
  std::vector<double> beta;   // N_i / K
  double max_spectral_norm = 0.0;
  std::vector<std::string> warnings;

  const CMatrix& T(int k, int i) const {
    return corr[static_cast<std::size_t>(k) * M + i];
  }
  int total_antennas() const {
    int n = 0;
    for (int ni : N) n += ni;
    return n;
  }
  /// First row/column of BS i inside the stacked N-dimensional space.
  int offset(int i) const {
    int o = 0;
    for (int j = 0; j < i; ++j) o += N[j];
    return o;
  }
};

/// Per-user block-diagonal weights of the CSIT decomposition
/// hhat = T^{1/2}(Lambda x + Omega v).
struct CsitDecomposition {
  RMatrix psi;                      // K x M, sqrt(1 - tau2)
  std::vector<RVector> lambda_diag;  // K entries, length N
  std::vector<RVector> omega_diag;   // K entries, length N
};

inline CsitDecomposition csit_decomposition(const Scenario& s) {
  CsitDecomposition d;
  d.psi = s.psi;
  const int n = s.total_antennas();
  for (int k = 0; k < s.K; ++k) {
    RVector lam(n), om(n);
    for (int i = 0; i < s.M; ++i) {
      lam.segment(s.offset(i), s.N[i]).setConstant(s.psi(k, i));
      om.segment(s.offset(i), s.N[i]).setConstant(std::sqrt(s.tau2(k, i)));
    }
    d.lambda_diag.push_back(std::move(lam));
    d.omega_diag.push_back(std::move(om));
  }
  return d;
}

/// Exponential correlation model gain * [r^{|j-l|}].
inline CMatrix exp_correlation(int n, double r, double gain = 1.0) {
  if (!(r >= 0.0 && r < 1.0)) {
    throw InvalidScenario("exponential correlation coefficient must lie in [0, 1)");
  }
  if (!(gain > 0.0)) throw InvalidScenario("path gain must be positive");
  if (n < 1) throw InvalidScenario("antenna count must be positive");
  CMatrix t(n, n);
  for (int j = 0; j < n; ++j) {
    for (int l = 0; l < n; ++l) {
      t(j, l) = gain * std::pow(r, std::abs(j - l));
    }
  }
  return t;
}

inline CMatrix scale_path_gain(const CMatrix& t, double gain) {
  return t * gain;
}

namespace detail {

inline constexpr double kHermitianRejectTol = 1e-9;
inline constexpr double kEigenvalueFloor = -1e-10;

inline void check_correlation(const CMatrix& t, int k, int i, int n) {
  const std::string where =
      " (user " + std::to_string(k) + ", BS " + std::to_string(i) + ")";
  if (t.rows() != n || t.cols() != n) {
    throw InvalidScenario("dimension mismatch: correlation matrix must be " +
                          std::to_string(n) + "x" + std::to_string(n) + where);
  }
  if (!t.allFinite()) throw InvalidScenario("non-finite correlation matrix" + where);
  const double scale = std::max(1.0, linalg::max_abs(t));
  if (linalg::hermitian_defect(t) > kHermitianRejectTol * scale) {
    throw InvalidScenario("non-Hermitian correlation matrix" + where);
  }
}

}  // namespace detail

/// Validates the inputs and assembles a Scenario. Correlation matrices are
/// symmetrized as (T + T^H)/2 before the definiteness check.
inline Scenario make_scenario(int M, std::vector<int> N, int K, double rho,
                              std::vector<CMatrix> corr, RMatrix tau2) {
  if (M < 1) throw InvalidScenario("M must be a positive integer");
  if (K < 1) throw InvalidScenario("K must be a positive integer");
  if (static_cast<int>(N.size()) != M) {
    throw InvalidScenario("dimension mismatch: N must list one antenna count per BS");
  }
  for (int ni : N) {
    if (ni < 1) throw InvalidScenario("antenna counts must be positive");
  }
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidScenario("rho must be positive");
  if (corr.size() != static_cast<std::size_t>(K) * M) {
    throw InvalidScenario("dimension mismatch: need K*M correlation matrices");
  }
  if (tau2.rows() != K || tau2.cols() != M) {
    throw InvalidScenario("dimension mismatch: tau2 must be K x M");
  }

  Scenario s;
  s.M = M;
  s.N = std::move(N);
  s.K = K;
  s.rho = rho;
  s.corr.reserve(corr.size());
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < M; ++i) {
      const CMatrix& raw = corr[static_cast<std::size_t>(k) * M + i];
      detail::check_correlation(raw, k, i, s.N[i]);
      CMatrix t = linalg::hermitian_part(raw);
      if (linalg::min_eigenvalue(t) < detail::kEigenvalueFloor) {
        throw InvalidScenario("indefinite correlation matrix (user " + std::to_string(k) +
                              ", BS " + std::to_string(i) + ")");
      }
      const double norm = linalg::spectral_norm(t);
      if (!std::isfinite(norm)) throw InvalidScenario("unbounded correlation matrix");
      s.max_spectral_norm = std::max(s.max_spectral_norm, norm);
      if (norm == 0.0) {
        s.warnings.push_back("zero correlation block (dead link) at user " +
                             std::to_string(k) + ", BS " + std::to_string(i));
      }
      s.corr.push_back(std::move(t));
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < M; ++i) {
      const double t2 = tau2(k, i);
      if (!(t2 >= 0.0 && t2 <= 1.0)) {
        throw InvalidScenario("tau2 outside [0,1] at user " + std::to_string(k) +
                              ", BS " + std::to_string(i));
      }
    }
  }
  s.tau2 = std::move(tau2);
  s.psi = (1.0 - s.tau2.array()).sqrt().matrix();
  for (int ni : s.N) s.beta.push_back(static_cast<double>(ni) / K);
  return s;
}

/// Same system with different CSIT error powers. Correlations are reused
/// as validated.
inline Scenario with_tau2(const Scenario& s, const RMatrix& tau2) {
  if (tau2.rows() != s.K || tau2.cols() != s.M) {
    throw InvalidScenario("dimension mismatch: tau2 must be K x M");
  }
  if (!(tau2.array() >= 0.0 && tau2.array() <= 1.0).all()) {
    throw InvalidScenario("tau2 outside [0,1]");
  }
  Scenario out = s;
  out.tau2 = tau2;
  out.psi = (1.0 - out.tau2.array()).sqrt().matrix();
  return out;
}

inline Scenario with_rho(const Scenario& s, double rho) {
  if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidScenario("rho must be positive");
  Scenario out = s;
  out.rho = rho;
  return out;
}

/// Identity correlations with per-cell gains and a common CSIT error power.
inline Scenario uniform_scenario(int M, std::vector<int> N, int K, double rho,
                                 double tau2, std::vector<double> gains = {}) {
  if (gains.empty()) gains.assign(static_cast<std::size_t>(M), 1.0);
  std::vector<CMatrix> corr;
  for (int k = 0; k < K; ++k) {
    for (int i = 0; i < M; ++i) {
      corr.push_back(CMatrix::Identity(N.at(i), N.at(i)) * gains.at(i));
    }
  }
  return make_scenario(M, std::move(N), K, rho, std::move(corr),
                       RMatrix::Constant(K, M, tau2));
}

// ---------------------------------------------------------------------------
// JSON configuration
// ---------------------------------------------------------------------------

namespace detail {

using nlohmann::json;

inline CMatrix matrix_from_json(const json& j, int n) {
  auto read_real = [n](const json& rows, const char* what) {
    RMatrix m(n, n);
    if (!rows.is_array() || static_cast<int>(rows.size()) != n) {
      throw InvalidScenario(std::string("dimension mismatch in explicit matrix '") + what + "'");
    }
    for (int r = 0; r < n; ++r) {
      if (!rows[r].is_array() || static_cast<int>(rows[r].size()) != n) {
        throw InvalidScenario(std::string("dimension mismatch in explicit matrix '") + what + "'");
      }
      for (int c = 0; c < n; ++c) m(r, c) = rows[r][c].get<double>();
    }
    return m;
  };
  const json& re = j.contains("re") ? j.at("re") : j.at("data");
  CMatrix out = read_real(re, "re").cast<Complex>();
  if (j.contains("im")) {
    out += Complex(0.0, 1.0) * read_real(j.at("im"), "im").cast<Complex>();
  }
  return out;
}

inline double gain_of(const json& spec) {
  if (spec.contains("gain_db")) return db_to_linear(spec.at("gain_db").get<double>());
  return spec.value("gain", 1.0);
}

inline CMatrix correlation_from_spec(const json& spec, int n, Engine& eng,
                                     const std::filesystem::path& base_dir) {
  const std::string kind = spec.value("kind", std::string("identity"));
  if (kind == "identity") {
    const double g = gain_of(spec);
    if (g < 0.0) throw InvalidScenario("path gain must be nonnegative");
    return CMatrix::Identity(n, n) * g;
  }
  if (kind == "exp") {
    return exp_correlation(n, spec.at("r").get<double>(), gain_of(spec));
  }
  if (kind == "random_exp") {
    auto range = spec.value("r_range", std::vector<double>{0.0, 0.9});
    const double r = uniform(eng, range.at(0), range.at(1));
    return exp_correlation(n, r, gain_of(spec));
  }
  if (kind == "matrix") {
    if (spec.contains("file")) {
      std::filesystem::path p = spec.at("file").get<std::string>();
      if (p.is_relative()) p = base_dir / p;
      std::ifstream in(p);
      if (!in) throw InvalidScenario("cannot open correlation file " + p.string());
      return matrix_from_json(json::parse(in), n) * gain_of(spec);
    }
    return matrix_from_json(spec, n) * gain_of(spec);
  }
  throw InvalidScenario("unknown correlation kind '" + kind + "'");
}

}  // namespace detail

/// Builds a Scenario from a JSON document with keys M, N, K, snr_db|rho,
/// correlation and tau2.
///
/// `correlation` is a single spec (all links), an array of M specs (per
/// cell) or a K x M nested array. A spec is {"kind": "identity"|"exp"|
/// "random_exp"|"matrix", ...}. `tau2` is a scalar, a per-cell array, a
/// K x M array or {"kind": "uniform_random", "seed": s}. Random kinds draw
/// from the document-level "seed" (default 0).
inline Scenario build_scenario(const nlohmann::json& cfg,
                               const std::filesystem::path& base_dir = ".") {
  using nlohmann::json;
  try {
    const int M = cfg.at("M").get<int>();
    const int K = cfg.at("K").get<int>();
    std::vector<int> N;
    if (cfg.at("N").is_array()) {
      N = cfg.at("N").get<std::vector<int>>();
    } else {
      N.assign(static_cast<std::size_t>(std::max(M, 0)), cfg.at("N").get<int>());
    }
    if (M < 1 || K < 1) throw InvalidScenario("M and K must be positive integers");
    if (static_cast<int>(N.size()) != M) {
      throw InvalidScenario("dimension mismatch: N must list one antenna count per BS");
    }
    double rho = 0.0;
    if (cfg.contains("rho")) {
      rho = cfg.at("rho").get<double>();
    } else if (cfg.contains("snr_db")) {
      rho = db_to_linear(cfg.at("snr_db").get<double>());
    } else {
      throw InvalidScenario("config needs 'rho' or 'snr_db'");
    }
    Engine eng = make_engine(cfg.value("seed", std::uint64_t{0}));

    std::vector<CMatrix> corr;
    const json corr_cfg = cfg.value("correlation", json{{"kind", "identity"}});
    for (int k = 0; k < K; ++k) {
      for (int i = 0; i < M; ++i) {
        const json* spec = &corr_cfg;
        if (corr_cfg.is_array()) {
          if (corr_cfg.size() == static_cast<std::size_t>(K) && corr_cfg[0].is_array()) {
            if (corr_cfg[k].size() != static_cast<std::size_t>(M)) {
              throw InvalidScenario("dimension mismatch in correlation array");
            }
            spec = &corr_cfg[k][i];
          } else if (corr_cfg.size() == static_cast<std::size_t>(M)) {
            spec = &corr_cfg[i];
          } else {
            throw InvalidScenario("dimension mismatch in correlation array");
          }
        }
        corr.push_back(detail::correlation_from_spec(*spec, N[i], eng, base_dir));
      }
    }

    RMatrix tau2 = RMatrix::Zero(K, M);
    const json t2 = cfg.value("tau2", json(0.0));
    if (t2.is_number()) {
      tau2.setConstant(t2.get<double>());
    } else if (t2.is_object()) {
      const std::string kind = t2.value("kind", std::string());
      if (kind != "uniform_random") throw InvalidScenario("unknown tau2 kind '" + kind + "'");
      Engine teng = t2.contains("seed") ? make_engine(t2.at("seed").get<std::uint64_t>()) : eng;
      auto range = t2.value("range", std::vector<double>{0.0, 1.0});
      for (int k = 0; k < K; ++k) {
        for (int i = 0; i < M; ++i) tau2(k, i) = uniform(teng, range.at(0), range.at(1));
      }
    } else if (t2.is_array() && !t2.empty() && t2[0].is_array()) {
      if (t2.size() != static_cast<std::size_t>(K)) {
        throw InvalidScenario("dimension mismatch: tau2 must be K x M");
      }
      for (int k = 0; k < K; ++k) {
        if (t2[k].size() != static_cast<std::size_t>(M)) {
          throw InvalidScenario("dimension mismatch: tau2 must be K x M");
        }
        for (int i = 0; i < M; ++i) tau2(k, i) = t2[k][i].get<double>();
      }
    } else if (t2.is_array()) {
      if (t2.size() != static_cast<std::size_t>(M)) {
        throw InvalidScenario("dimension mismatch: per-cell tau2 needs M entries");
      }
      for (int k = 0; k < K; ++k) {
        for (int i = 0; i < M; ++i) tau2(k, i) = t2[i].get<double>();
      }
    } else {
      throw InvalidScenario("unsupported tau2 value");
    }
    return make_scenario(M, std::move(N), K, rho, std::move(corr), std::move(tau2));
  } catch (const json::exception& e) {
    throw InvalidScenario(std::string("malformed scenario config: ") + e.what());
  }
}

/// Fully explicit JSON form; build_scenario() on it reproduces `s` exactly.
inline nlohmann::json scenario_to_json(const Scenario& s) {
  using nlohmann::json;
  json corr = json::array();
  for (int k = 0; k < s.K; ++k) {
    json row = json::array();
    for (int i = 0; i < s.M; ++i) {
      const CMatrix& t = s.T(k, i);
      json re = json::array(), im = json::array();
      for (Eigen::Index r = 0; r < t.rows(); ++r) {
        json rr = json::array(), ri = json::array();
        for (Eigen::Index c = 0; c < t.cols(); ++c) {
          rr.push_back(t(r, c).real());
          ri.push_back(t(r, c).imag());
        }
        re.push_back(rr);
        im.push_back(ri);
      }
      row.push_back(json{{"kind", "matrix"}, {"re", re}, {"im", im}});
    }
    corr.push_back(row);
  }
  json tau2 = json::array();
  for (int k = 0; k < s.K; ++k) {
    json row = json::array();
    for (int i = 0; i < s.M; ++i) row.push_back(s.tau2(k, i));
    tau2.push_back(row);
  }
  return json{{"M", s.M}, {"N", s.N}, {"K", s.K}, {"rho", s.rho},
              {"correlation", corr}, {"tau2", tau2}};
}

/// True when T_{k,i} is identical across users for every BS.
inline bool users_share_correlation(const Scenario& s) {
  for (int k = 1; k < s.K; ++k) {
    for (int i = 0; i < s.M; ++i) {
      if (s.T(k, i) != s.T(0, i)) return false;
    }
  }
  return true;
}

/// Equal antenna counts, one correlation matrix for every link, and CSIT
/// quality that depends on the BS only.
inline bool is_homogeneous(const Scenario& s) {
  for (int i = 1; i < s.M; ++i) {
    if (s.N[i] != s.N[0]) return false;
  }
  for (int k = 0; k < s.K; ++k) {
    for (int i = 0; i < s.M; ++i) {
      if (s.T(k, i) != s.T(0, 0)) return false;
      if (s.tau2(k, i) != s.tau2(0, i)) return false;
    }
  }
  return true;
}

inline bool has_identity_correlation(const Scenario& s) {
  for (const auto& t : s.corr) {
    if (t != CMatrix::Identity(t.rows(), t.cols())) return false;
  }
  return true;
}

}  // namespace rzf

#endif  // RZF_SCENARIO_HPP
