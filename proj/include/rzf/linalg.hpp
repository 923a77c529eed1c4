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

#ifndef RZF_LINALG_HPP
#define RZF_LINALG_HPP

#include <algorithm>

#include "rzf/common.hpp"

namespace rzf::linalg {

inline CMatrix hermitian_part(const CMatrix& a) {
  return (a + a.adjoint()) * 0.5;
}

inline double max_abs(const CMatrix& a) {
  return a.size() == 0 ? 0.0 : a.cwiseAbs().maxCoeff();
}

/// Largest |a - a^H| entry.
inline double hermitian_defect(const CMatrix& a) {
  return max_abs(a - a.adjoint());
}

/// tr(a b) without forming the product.
inline Complex trace_of_product(const CMatrix& a, const CMatrix& b) {
  return (a.array() * b.transpose().array()).sum();
}

/// Inverse of a Hermitian positive definite matrix via Cholesky; the result
/// is re-symmetrized.
inline CMatrix hpd_inverse(const CMatrix& a) {
  Eigen::LLT<CMatrix> llt(a);
  if (llt.info() != Eigen::Success) {
    throw SingularSystem("Cholesky factorization failed (matrix not positive definite)");
  }
  CMatrix inv = llt.solve(CMatrix::Identity(a.rows(), a.cols()));
  return hermitian_part(inv);
}

/// Principal square root of a Hermitian nonnegative definite matrix.
/// Eigenvalues within rounding of zero are clamped.
inline CMatrix hermitian_sqrt(const CMatrix& a) {
  if (a.rows() == 0) return a;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a);
  RVector ev = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  CMatrix v = es.eigenvectors();
  return hermitian_part(v * ev.asDiagonal() * v.adjoint());
}

inline double min_eigenvalue(const CMatrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().minCoeff();
}

inline double spectral_norm(const CMatrix& a) {
  if (a.rows() == 0) return 0.0;
  Eigen::SelfAdjointEigenSolver<CMatrix> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

}  // namespace rzf::linalg

#endif  // RZF_LINALG_HPP
