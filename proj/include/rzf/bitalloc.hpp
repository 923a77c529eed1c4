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

#ifndef RZF_BITALLOC_HPP
#define RZF_BITALLOC_HPP

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <sstream>
#include <string>
#include <vector>

#include "rzf/common.hpp"
#include "rzf/det_sinr.hpp"
#include "rzf/parallel.hpp"
#include "rzf/regopt.hpp"
#include "rzf/rmt_core.hpp"
#include "rzf/scenario.hpp"

namespace rzf {

using BitVector = std::vector<int>;
using IMatrix = Eigen::MatrixXi;

/// Quantization-error level 2^{-B/(N-1)} for B bits on an N-antenna link.
inline double tau2_from_bits(int bits, int n) {
  if (n < 2) throw InvalidScenario("tau2_from_bits needs N_i >= 2; N_i = 1 has no quantization exponent");
  if (bits < 0) throw InvalidScenario("bit count must be nonnegative");
  return std::exp2(-static_cast<double>(bits) / (n - 1));
}

/// All compositions of B into M nonnegative parts, in lexicographic order.
inline std::vector<BitVector> enumerate_full(int B, int M) {
  if (B < 0 || M < 1) throw Error("enumerate_full needs B >= 0 and M >= 1");
  std::vector<BitVector> out;
  BitVector cur(static_cast<std::size_t>(M), 0);
  auto rec = [&](auto& self, int pos, int left) -> void {
    if (pos == M - 1) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (int b = 0; b <= left; ++b) {
      cur[pos] = b;
      self(self, pos + 1, left - b);
    }
  };
  rec(rec, 0, B);
  return out;
}

inline void check_permutation(const std::vector<int>& order, int M) {
  std::vector<int> sorted(order);
  std::sort(sorted.begin(), sorted.end());
  std::vector<int> expect(static_cast<std::size_t>(M));
  std::iota(expect.begin(), expect.end(), 0);
  if (sorted != expect) throw Error("order must be a permutation of 0..M-1");
}

/// Allocations whose entries are non-increasing along `order` (0-based BS
/// indices, strongest first), i.e. partitions of B into at most M parts
/// placed by rank. Lexicographic order of the resulting vectors.
inline std::vector<BitVector> enumerate_restricted(int B, int M, const std::vector<int>& order) {
  if (B < 0 || M < 1) throw Error("enumerate_restricted needs B >= 0 and M >= 1");
  check_permutation(order, M);
  std::vector<BitVector> out;
  BitVector parts(static_cast<std::size_t>(M), 0);
  auto rec = [&](auto& self, int pos, int left, int cap) -> void {
    if (pos == M - 1) {
      if (left > cap) return;
      parts[pos] = left;
      BitVector v(static_cast<std::size_t>(M), 0);
      for (int r = 0; r < M; ++r) v[order[r]] = parts[r];
      out.push_back(std::move(v));
      return;
    }
    for (int b = std::min(left, cap); b >= 0; --b) {
      if (b * (M - pos) < left) break;  // remaining parts cannot absorb the rest
      parts[pos] = b;
      self(self, pos + 1, left - b, b);
    }
  };
  rec(rec, 0, B, B);
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<BitVector> enumerate_restricted(int B, int M) {
  std::vector<int> order(static_cast<std::size_t>(M));
  std::iota(order.begin(), order.end(), 0);
  return enumerate_restricted(B, M, order);
}

/// C(B + M - 1, M - 1).
inline std::uint64_t count_compositions(int B, int M) {
  std::uint64_t r = 1;
  for (int j = 1; j < M; ++j) r = r * static_cast<std::uint64_t>(B + j) / static_cast<std::uint64_t>(j);
  return r;
}

/// Partitions of B into at most M parts.
inline std::uint64_t count_partitions(int B, int M) {
  std::vector<std::uint64_t> p(static_cast<std::size_t>(B) + 1, 0);
  p[0] = 1;
  for (int part = 1; part <= M; ++part) {
    for (int b = part; b <= B; ++b) p[b] += p[b - part];
  }
  return p[B];
}

struct GainRanking {
  RMatrix gains;                        // K x M, tr(T_{k,i} Psi_i) / N_i
  std::vector<std::vector<int>> order;  // per user, strongest BS first
};

/// Per-user decreasing order of the equivalent channel gains; the lower BS
/// index comes first on ties.
inline GainRanking rank_links(const Scenario& s, const FixedPointSolution& fp) {
  GainRanking g;
  g.gains = RMatrix::Zero(s.K, s.M);
  for (int k = 0; k < s.K; ++k) {
    for (int i = 0; i < s.M; ++i) {
      g.gains(k, i) = linalg::trace_of_product(s.T(k, i), fp.Psi[i]).real() / s.N[i];
    }
    std::vector<int> ord(static_cast<std::size_t>(s.M));
    std::iota(ord.begin(), ord.end(), 0);
    std::stable_sort(ord.begin(), ord.end(),
                     [&](int a, int b) { return g.gains(k, a) > g.gains(k, b); });
    g.order.push_back(std::move(ord));
  }
  return g;
}

struct BitAllocation {
  IMatrix bits;  // K x M
  int budget = 0;
  bool restricted = false;
  std::vector<std::vector<int>> ranking;

  /// Empty string when every invariant holds, else a description.
  std::string check() const {
    for (Eigen::Index k = 0; k < bits.rows(); ++k) {
      if (bits.row(k).sum() != budget) return "row " + std::to_string(k) + " does not sum to the budget";
      if ((bits.row(k).array() < 0).any()) return "negative bit count";
      if (restricted) {
        const auto& ord = ranking.at(static_cast<std::size_t>(k));
        for (std::size_t r = 1; r < ord.size(); ++r) {
          if (bits(k, ord[r]) > bits(k, ord[r - 1])) return "row " + std::to_string(k) + " violates the rank order";
        }
      }
    }
    return {};
  }
};

/// K x M tau^2 matrix for a bit allocation.
inline RMatrix tau2_from_allocation(const Scenario& s, const IMatrix& bits) {
  RMatrix t(s.K, s.M);
  for (int k = 0; k < s.K; ++k) {
    for (int i = 0; i < s.M; ++i) t(k, i) = tau2_from_bits(bits(k, i), s.N[i]);
  }
  return t;
}

/// Spreads B as evenly as possible; lower BS indices take the remainder.
inline BitVector near_uniform(int B, int M) {
  BitVector v(static_cast<std::size_t>(M), B / M);
  for (int i = 0; i < B % M; ++i) ++v[i];
  return v;
}

enum class SearchSpace { full, restricted };

inline const char* to_string(SearchSpace sp) { return sp == SearchSpace::full ? "full" : "restricted"; }

struct AllocationOptions {
  double alpha_tolerance = 1e-4;    // golden-section tolerance per candidate
  std::size_t joint_limit = 50000;  // largest Cartesian product searched exactly
  int max_sweeps = 50;              // coordinate-ascent sweeps above the limit
  unsigned workers = 0;
};

struct AllocationResult {
  BitAllocation allocation;
  double sum_rate_nats = 0.0;
  double alpha = 0.0;
  AlphaMethod alpha_method = AlphaMethod::golden_section;
  std::size_t evaluated = 0;       // candidate allocations evaluated
  std::size_t per_user_space = 0;  // candidates per user (max over users)
  std::string strategy;            // "user_symmetric", "joint" or "coordinate_ascent"
  GainRanking ranking;
};

/// Deterministic sum-rate of a candidate with alpha re-optimized.
struct CandidateValue {
  double rate = 0.0;
  double alpha = 0.0;
  AlphaMethod method = AlphaMethod::golden_section;
};

inline CandidateValue evaluate_allocation(const Scenario& s, const IMatrix& bits,
                                          const AllocationOptions& opt = {}) {
  const Scenario c = with_tau2(s, tau2_from_allocation(s, bits));
  CandidateValue v;
  if (is_homogeneous(c) && has_identity_correlation(c) && (c.tau2.array() < 1.0).all()) {
    const AlphaResult a = closed_form_alpha(c);
    v.rate = a.objective;
    v.alpha = a.alpha_opt;
    v.method = a.method;
    return v;
  }
  GoldenOptions g;
  g.tolerance = opt.alpha_tolerance;
  const AlphaResult a = golden_section_alpha(c, g);
  v.rate = a.objective;
  v.alpha = a.alpha_opt;
  v.method = a.method;
  return v;
}

namespace detail {

inline IMatrix broadcast_rows(const BitVector& v, int K) {
  IMatrix m(K, static_cast<int>(v.size()));
  for (int k = 0; k < K; ++k) {
    for (std::size_t i = 0; i < v.size(); ++i) m(k, static_cast<Eigen::Index>(i)) = v[i];
  }
  return m;
}

/// Rates this close (relative) count as equal, so that mirror-image
/// candidates differing only by rounding resolve to the first index.
inline constexpr double kTieTolerance = 1e-10;

inline bool better(double a, double b) { return a > b + kTieTolerance * std::abs(b); }

/// Index of the maximum; the first index wins ties.
inline std::size_t argmax_first(const std::vector<CandidateValue>& vals) {
  std::size_t best = 0;
  for (std::size_t t = 1; t < vals.size(); ++t) {
    if (better(vals[t].rate, vals[best].rate)) best = t;
  }
  return best;
}

}  // namespace detail

/// Exhaustive search of the bit allocation maximizing the deterministic
/// sum-rate with alpha re-optimized per candidate. Links are ranked once, at
/// the optimal alpha of the near-uniform allocation.
inline AllocationResult search_allocation(const Scenario& s, int B, SearchSpace space,
                                          const AllocationOptions& opt = {}) {
  if (B < 0) throw Error("bit budget must be nonnegative");
  for (int i = 0; i < s.M; ++i) {
    if (s.N[i] < 2) throw InvalidScenario("bit allocation needs N_i >= 2 at every BS");
  }
  AllocationResult res;
  res.allocation.budget = B;
  res.allocation.restricted = space == SearchSpace::restricted;

  const IMatrix ref_bits = detail::broadcast_rows(near_uniform(B, s.M), s.K);
  const CandidateValue ref = evaluate_allocation(s, ref_bits, opt);
  const Scenario ref_s = with_tau2(s, tau2_from_allocation(s, ref_bits));
  res.ranking = rank_links(ref_s, solve_fixed_point(ref_s, ref.alpha));
  res.allocation.ranking = res.ranking.order;

  std::vector<std::vector<BitVector>> spaces;
  for (int k = 0; k < s.K; ++k) {
    spaces.push_back(space == SearchSpace::full ? enumerate_full(B, s.M)
                                                : enumerate_restricted(B, s.M, res.ranking.order[k]));
    res.per_user_space = std::max(res.per_user_space, spaces.back().size());
  }

  auto finish = [&](const IMatrix& bits, const CandidateValue& v) {
    res.allocation.bits = bits;
    res.sum_rate_nats = v.rate;
    res.alpha = v.alpha;
    res.alpha_method = v.method;
    return res;
  };

  // Users with identical statistics share one allocation.
  if (users_share_correlation(s) && s.K > 0) {
    res.strategy = "user_symmetric";
    const auto& cand = spaces[0];
    const auto vals = detail::parallel_map(cand.size(), opt.workers, [&](std::size_t t) {
      return evaluate_allocation(s, detail::broadcast_rows(cand[t], s.K), opt);
    });
    res.evaluated = cand.size();
    const std::size_t best = detail::argmax_first(vals);
    return finish(detail::broadcast_rows(cand[best], s.K), vals[best]);
  }

  // Joint search over the Cartesian product, user 0 most significant, so
  // index order is lexicographic order of the stacked bit matrix.
  double total = 1.0;
  for (const auto& sp : spaces) total *= static_cast<double>(sp.size());
  auto assemble = [&](const std::vector<std::size_t>& idx) {
    IMatrix m(s.K, s.M);
    for (int k = 0; k < s.K; ++k) {
      for (int i = 0; i < s.M; ++i) m(k, i) = spaces[k][idx[k]][i];
    }
    return m;
  };
  if (total <= static_cast<double>(opt.joint_limit)) {
    res.strategy = "joint";
    const auto count = static_cast<std::size_t>(total);
    auto decode = [&](std::size_t t) {
      std::vector<std::size_t> idx(static_cast<std::size_t>(s.K));
      for (int k = s.K - 1; k >= 0; --k) {
        idx[k] = t % spaces[k].size();
        t /= spaces[k].size();
      }
      return idx;
    };
    const auto vals = detail::parallel_map(
        count, opt.workers, [&](std::size_t t) { return evaluate_allocation(s, assemble(decode(t)), opt); });
    res.evaluated = count;
    const std::size_t best = detail::argmax_first(vals);
    return finish(assemble(decode(best)), vals[best]);
  }

  // Cyclic coordinate ascent over users, starting from each user's
  // candidate closest to uniform (first in order on ties).
  res.strategy = "coordinate_ascent";
  std::vector<std::size_t> idx(static_cast<std::size_t>(s.K), 0);
  const BitVector uni = near_uniform(B, s.M);
  for (int k = 0; k < s.K; ++k) {
    int best_d = std::numeric_limits<int>::max();
    for (std::size_t t = 0; t < spaces[k].size(); ++t) {
      int d = 0;
      for (int i = 0; i < s.M; ++i) d += std::abs(spaces[k][t][i] - uni[i]);
      if (d < best_d) {
        best_d = d;
        idx[k] = t;
      }
    }
  }
  CandidateValue current = evaluate_allocation(s, assemble(idx), opt);
  res.evaluated = 1;
  for (int sweep = 0; sweep < opt.max_sweeps; ++sweep) {
    bool moved = false;
    for (int k = 0; k < s.K; ++k) {
      const auto vals = detail::parallel_map(spaces[k].size(), opt.workers, [&](std::size_t t) {
        auto trial = idx;
        trial[k] = t;
        return evaluate_allocation(s, assemble(trial), opt);
      });
      res.evaluated += vals.size();
      const std::size_t best = detail::argmax_first(vals);
      if (detail::better(vals[best].rate, current.rate)) {
        moved = moved || best != idx[k];
        idx[k] = best;
        current = vals[best];
      }
    }
    if (!moved) break;
  }
  return finish(assemble(idx), current);
}

/// Same allocation on every user and every row; used for uniform baselines.
inline IMatrix uniform_allocation(const Scenario& s, int B) {
  return detail::broadcast_rows(near_uniform(B, s.M), s.K);
}

}  // namespace rzf

#endif  // RZF_BITALLOC_HPP
