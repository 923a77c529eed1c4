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

#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "rzf/scenario.hpp"

namespace {

using namespace rzf;
using nlohmann::json;

TEST(Scenario, SingleCellIdentity) {
  const Scenario s = build_scenario(json{{"M", 1}, {"N", {4}}, {"K", 4}, {"rho", 10.0}});
  EXPECT_EQ(s.M, 1);
  EXPECT_DOUBLE_EQ(s.beta[0], 1.0);
  EXPECT_EQ(s.T(0, 0), CMatrix::Identity(4, 4));
  EXPECT_TRUE(s.warnings.empty());
}

TEST(Scenario, FourCellSettingWithPerCellTau) {
  const Scenario s = build_scenario(
      json{{"M", 4}, {"N", 8}, {"K", 32}, {"snr_db", 10.0}, {"tau2", {0.0, 0.1, 0.2, 0.3}}});
  EXPECT_EQ(s.total_antennas(), 32);
  EXPECT_DOUBLE_EQ(s.rho, 10.0);
  for (int k = 0; k < s.K; ++k) {
    EXPECT_DOUBLE_EQ(s.tau2(k, 2), 0.2);
  }
  EXPECT_DOUBLE_EQ(s.beta[3], 0.25);
}

TEST(Scenario, RejectsIndefiniteCorrelation) {
  CMatrix t = CMatrix::Identity(2, 2);
  t(1, 1) = -0.5;
  try {
    make_scenario(1, {2}, 1, 1.0, {t}, RMatrix::Zero(1, 1));
    FAIL() << "expected rejection";
  } catch (const InvalidScenario& e) {
    EXPECT_NE(std::string(e.what()).find("indefinite correlation matrix"), std::string::npos);
  }
}

TEST(Scenario, RejectsNonHermitianAndBadRanges) {
  CMatrix t = CMatrix::Identity(2, 2);
  t(0, 1) = 0.3;
  EXPECT_THROW(make_scenario(1, {2}, 1, 1.0, {t}, RMatrix::Zero(1, 1)), InvalidScenario);
  const CMatrix id = CMatrix::Identity(2, 2);
  EXPECT_THROW(make_scenario(1, {2}, 1, 1.0, {id}, RMatrix::Constant(1, 1, 1.2)), InvalidScenario);
  EXPECT_THROW(make_scenario(1, {2}, 1, 0.0, {id}, RMatrix::Zero(1, 1)), InvalidScenario);
  EXPECT_THROW(make_scenario(1, {2, 2}, 1, 1.0, {id}, RMatrix::Zero(1, 1)), InvalidScenario);
  EXPECT_THROW(make_scenario(1, {3}, 1, 1.0, {id}, RMatrix::Zero(1, 1)), InvalidScenario);
  EXPECT_THROW(build_scenario(json{{"M", 2}, {"N", {4}}, {"K", 1}, {"rho", 1.0}}), InvalidScenario);
  EXPECT_THROW(build_scenario(json{{"M", 1}, {"N", {4}}, {"K", 1}}), InvalidScenario);
}

TEST(Scenario, SymmetrizesRoundingNoise) {
  CMatrix t = exp_correlation(3, 0.4);
  t(0, 2) += 1e-13;
  const Scenario s = make_scenario(1, {3}, 1, 1.0, {t}, RMatrix::Zero(1, 1));
  EXPECT_EQ(s.T(0, 0), s.T(0, 0).adjoint());
}

TEST(ExpCorrelation, Examples) {
  EXPECT_EQ(exp_correlation(2, 0.0, 1.0), CMatrix::Identity(2, 2));
  const CMatrix r = exp_correlation(3, 0.5, 1.0);
  const double expect[3][3] = {{1, 0.5, 0.25}, {0.5, 1, 0.5}, {0.25, 0.5, 1}};
  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) EXPECT_DOUBLE_EQ(r(a, b).real(), expect[a][b]);
  }
  const CMatrix t = exp_correlation(4, 0.9, 2.0);
  Eigen::SelfAdjointEigenSolver<CMatrix> es(t);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
  EXPECT_DOUBLE_EQ(t.trace().real(), 8.0);
  EXPECT_EQ(Eigen::LLT<CMatrix>(t).info(), Eigen::Success);
}

TEST(ExpCorrelation, RejectsOutOfRange) {
  EXPECT_THROW(exp_correlation(3, 1.0), InvalidScenario);
  EXPECT_THROW(exp_correlation(3, -0.1), InvalidScenario);
  EXPECT_THROW(exp_correlation(3, 0.2, 0.0), InvalidScenario);
}

TEST(ExpCorrelation, TraceIsExactOnGrid) {
  for (int n : {1, 2, 5, 9}) {
    for (double r : {0.0, 0.3, 0.77, 0.99}) {
      for (double g : {0.0125, 1.0, 3.5}) {
        EXPECT_DOUBLE_EQ(exp_correlation(n, r, g).trace().real(), n * g);
      }
    }
  }
}

TEST(PathGain, Scaling) {
  EXPECT_EQ(scale_path_gain(CMatrix::Identity(4, 4), 0.0125), CMatrix::Identity(4, 4) * 0.0125);
  const CMatrix t = exp_correlation(3, 0.6);
  EXPECT_EQ(scale_path_gain(t, 1.0), t);
  const CMatrix z = scale_path_gain(t, 0.0);
  EXPECT_EQ(z, CMatrix::Zero(3, 3));
  const Scenario s = make_scenario(2, {3, 3}, 1, 1.0, {t, z}, RMatrix::Zero(1, 2));
  ASSERT_EQ(s.warnings.size(), 1u);
  EXPECT_NE(s.warnings[0].find("dead link"), std::string::npos);
}

TEST(Csit, DecompositionIdentity) {
  const Scenario s = build_scenario(json{{"M", 2},
                                         {"N", {3, 5}},
                                         {"K", 4},
                                         {"rho", 2.0},
                                         {"seed", 11},
                                         {"tau2", {{"kind", "uniform_random"}}}});
  for (int k = 0; k < s.K; ++k) {
    for (int i = 0; i < s.M; ++i) {
      EXPECT_NEAR(s.psi(k, i) * s.psi(k, i) + s.tau2(k, i), 1.0, 1e-14);
    }
  }
  const CsitDecomposition cd = csit_decomposition(s);
  ASSERT_EQ(cd.lambda_diag.size(), 4u);
  EXPECT_EQ(cd.lambda_diag[1].size(), 8);
  EXPECT_DOUBLE_EQ(cd.lambda_diag[1](4), s.psi(1, 1));
  EXPECT_DOUBLE_EQ(cd.omega_diag[2](0), std::sqrt(s.tau2(2, 0)));
}

TEST(Json, RoundTripIsBitExact) {
  const json cfg{{"M", 2},
                 {"N", {3, 4}},
                 {"K", 3},
                 {"snr_db", 7.0},
                 {"seed", 5},
                 {"correlation", {{{"kind", "random_exp"}, {"gain_db", -3.0}}, {{"kind", "exp"}, {"r", 0.3}}}},
                 {"tau2", {{"kind", "uniform_random"}, {"range", {0.0, 0.5}}}}};
  const Scenario a = build_scenario(cfg);
  const Scenario b = build_scenario(scenario_to_json(a));
  EXPECT_EQ(a.N, b.N);
  EXPECT_EQ(a.rho, b.rho);
  EXPECT_EQ(a.tau2, b.tau2);
  for (std::size_t j = 0; j < a.corr.size(); ++j) EXPECT_EQ(a.corr[j], b.corr[j]);
}

TEST(Json, GeneratorsAreSeeded) {
  const json cfg{{"M", 1}, {"N", {4}}, {"K", 6}, {"rho", 1.0}, {"seed", 99},
                 {"correlation", {{"kind", "random_exp"}}}, {"tau2", {{"kind", "uniform_random"}}}};
  const Scenario a = build_scenario(cfg);
  const Scenario b = build_scenario(cfg);
  EXPECT_EQ(a.tau2, b.tau2);
  EXPECT_EQ(a.corr[3], b.corr[3]);
  EXPECT_TRUE((a.tau2.array() >= 0.0).all() && (a.tau2.array() <= 1.0).all());
  EXPECT_FALSE(users_share_correlation(a));
}

TEST(Json, PerLinkArraysAndMatrixFile) {
  const auto dir = std::filesystem::temp_directory_path() / "rzf_scenario_test";
  std::filesystem::create_directories(dir);
  {
    std::ofstream out(dir / "t.json");
    out << R"({"re": [[2, 0.5], [0.5, 1]], "im": [[0, 0.1], [-0.1, 0]]})";
  }
  const json link_matrix{{"kind", "matrix"}, {"file", "t.json"}};
  const json cfg{{"M", 2},
                 {"N", {2, 2}},
                 {"K", 2},
                 {"rho", 1.0},
                 {"correlation", {{link_matrix, {{"kind", "identity"}, {"gain", 0.5}}},
                                  {{{"kind", "identity"}}, link_matrix}}},
                 {"tau2", {{0.1, 0.2}, {0.3, 0.4}}}};
  const Scenario s = build_scenario(cfg, dir);
  EXPECT_DOUBLE_EQ(s.T(0, 0)(0, 1).imag(), 0.1);
  EXPECT_DOUBLE_EQ(s.T(0, 1)(1, 1).real(), 0.5);
  EXPECT_DOUBLE_EQ(s.T(1, 1)(0, 0).real(), 2.0);
  EXPECT_DOUBLE_EQ(s.tau2(1, 0), 0.3);
  EXPECT_THROW(build_scenario(json{{"M", 1}, {"N", {2}}, {"K", 1}, {"rho", 1.0},
                                   {"correlation", {{"kind", "matrix"}, {"file", "missing.json"}}}},
                              dir),
               InvalidScenario);
}

TEST(Predicates, Homogeneity) {
  const Scenario h = uniform_scenario(2, {4, 4}, 3, 1.0, 0.1);
  EXPECT_TRUE(is_homogeneous(h));
  EXPECT_TRUE(has_identity_correlation(h));
  RMatrix t2 = h.tau2;
  t2(1, 0) = 0.3;
  EXPECT_FALSE(is_homogeneous(with_tau2(h, t2)));
  EXPECT_FALSE(is_homogeneous(uniform_scenario(2, {4, 5}, 3, 1.0, 0.1)));
  EXPECT_FALSE(has_identity_correlation(uniform_scenario(2, {4, 4}, 3, 1.0, 0.1, {1.0, 0.5})));
}

}  // namespace
