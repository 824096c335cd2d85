// Copyright 2026 The rubriclearn Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "rubriclearn/coding_rate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "oracles.hpp"

namespace rubriclearn {
namespace {

const CodingRateParams kUnitEps{1.0, 1e-10};

EmbeddingMatrix from(const Eigen::MatrixXd& m) { return EmbeddingMatrix::from_matrix(m); }

TEST(CodingRate, EmptyMatrixIsZero) {
  EXPECT_EQ(coding_rate(EmbeddingMatrix(8), kUnitEps), 0.0);
  EXPECT_EQ(coding_rate(EmbeddingMatrix(8), CodingRateParams{0.1, 0.0}), 0.0);
}

TEST(CodingRate, SingletonMatchesClosedForm) {
  const auto e = from(oracle::basis(3, 1));
  EXPECT_NEAR(coding_rate(e, kUnitEps), 0.5 * std::log(2.0), 1e-12);
  // 1/2 ln(1 + 1/eps^2) for any eps.
  EXPECT_NEAR(coding_rate(e, CodingRateParams{0.5, 0.0}), 0.5 * std::log(5.0), 1e-12);
}

TEST(CodingRate, OrthonormalAndDuplicatePairs) {
  Eigen::MatrixXd ortho = Eigen::MatrixXd::Identity(2, 2);
  EXPECT_NEAR(coding_rate(from(ortho), kUnitEps), std::log(1.5), 1e-12);
  EXPECT_NEAR(oracle::coding_rate_eig(ortho, 1.0), std::log(1.5), 1e-12);

  Eigen::MatrixXd dup(2, 2);
  dup << 1, 1, 0, 0;
  EXPECT_NEAR(coding_rate(from(dup), kUnitEps), 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(oracle::coding_rate_eig(dup, 1.0), 0.5 * std::log(2.0), 1e-12);
}

TEST(CodingRate, IngestionNormalizesColumns) {
  Eigen::MatrixXd m(2, 2);
  m << 3, 0, 4, 7;
  const auto e = from(m);
  EXPECT_NEAR(e.matrix().col(0).norm(), 1.0, 1e-12);
  EXPECT_NEAR(e.matrix().col(1).norm(), 1.0, 1e-12);
  EXPECT_NEAR(e.matrix()(0, 0), 0.6, 1e-15);
}

TEST(CodingRate, RejectsBadInput) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  EXPECT_THROW(from(m), Error);
  Eigen::MatrixXd zero = Eigen::MatrixXd::Zero(3, 1);
  EXPECT_THROW(from(zero), Error);
  std::vector<std::vector<double>> ragged{{1.0, 0.0}, {1.0}};
  EXPECT_THROW(EmbeddingMatrix::from_columns(ragged), Error);

  const auto e = from(oracle::basis(2, 0));
  EXPECT_THROW(coding_rate(e, CodingRateParams{0.0, 0.0}), Error);
  EXPECT_THROW(coding_rate(e, CodingRateParams{1.0, 1e-3}), Error);
  EXPECT_THROW(coding_rate(e, CodingRateParams{-1.0, 0.0}), Error);
}

TEST(CodingRate, RawMatrixWithNonFiniteEntryIsInputError) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Identity(2, 2);
  m(1, 0) = std::numeric_limits<double>::infinity();
  try {
    detail::coding_rate_raw(m, kUnitEps, GramForm::automatic);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::input);
  }
}

TEST(CodingRate, MatchesEigenvalueOracleOnRandomMatrices) {
  std::mt19937_64 rng(7);
  std::uniform_int_distribution<int> dim(1, 64), count(1, 32);
  std::uniform_real_distribution<double> eps(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const auto m = oracle::random_unit_columns(rng, dim(rng), count(rng));
    const CodingRateParams p{eps(rng), 1e-10};
    const auto e = from(m);
    EXPECT_NEAR(coding_rate(e, p), oracle::coding_rate_eig(m, p.epsilon), 1e-9);
  }
}

TEST(CodingRate, DualFormIdentity) {
  std::mt19937_64 rng(11);
  std::uniform_int_distribution<int> dim(1, 64), count(1, 32);
  for (int trial = 0; trial < 100; ++trial) {
    const auto e = from(oracle::random_unit_columns(rng, dim(rng), count(rng)));
    const CodingRateParams p{0.5, 1e-10};
    EXPECT_NEAR(coding_rate(e, p, GramForm::columns), coding_rate(e, p, GramForm::rows), 1e-9);
  }
}

TEST(CodingRate, ColumnPermutationInvariance) {
  std::mt19937_64 rng(13);
  for (int trial = 0; trial < 50; ++trial) {
    const auto m = oracle::random_unit_columns(rng, 16, 10);
    std::vector<int> perm(10);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    EXPECT_NEAR(coding_rate(from(m)), coding_rate(from(oracle::columns_of(m, perm))), 1e-12);
  }
}

TEST(CodingRate, RotationInvariance) {
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 50; ++trial) {
    const int d = 2 + trial % 20;
    const auto m = oracle::random_unit_columns(rng, d, 1 + trial % 12);
    const auto q = oracle::random_orthogonal(rng, d);
    EXPECT_NEAR(coding_rate(from(m)), coding_rate(from(q * m)), 1e-9);
  }
}

TEST(CodingRate, OrthogonalPairDominatesCorrelatedPairs) {
  std::mt19937_64 rng(19);
  std::uniform_real_distribution<double> angle(0.01, 3.13);
  const double orthogonal = coding_rate(from(Eigen::MatrixXd::Identity(2, 2)));
  for (int trial = 0; trial < 200; ++trial) {
    const double t = angle(rng);
    if (std::abs(std::cos(t)) < 1e-6) continue;
    Eigen::MatrixXd pair(2, 2);
    pair << 1, std::cos(t), 0, std::sin(t);
    const double oracle_rate = oracle::coding_rate_eig(pair, 0.5);
    EXPECT_GT(orthogonal, oracle_rate);
    EXPECT_NEAR(coding_rate(from(pair)), oracle_rate, 1e-12);
  }
}

TEST(CodingRate, AppendingDuplicateNeverHelpsBalancedBases) {
  // Bases of distinct orthonormal columns, arbitrarily rotated, and bases of
  // one repeated vector.
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> eps(0.1, 2.0);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = 1 + trial % 40;
    const int k = 1 + trial % std::min(d, 15);
    const auto q = oracle::random_orthogonal(rng, d);
    const Eigen::MatrixXd m = q.leftCols(k);
    const CodingRateParams p{eps(rng), 1e-10};
    const Eigen::VectorXd dup = m.col(trial % k);
    EXPECT_LE(marginal_gain(from(m), dup, p), 1e-12);
    EXPECT_LE(oracle::gain_eig(m, dup, p.epsilon), 1e-12);

    Eigen::MatrixXd repeated(d, k);
    for (int j = 0; j < k; ++j) repeated.col(j) = m.col(0);
    EXPECT_LE(marginal_gain(from(repeated), Eigen::VectorXd(m.col(0)), p), 1e-12);
  }
}

TEST(CodingRate, DuplicateOfUnderrepresentedDirectionCanHelp) {
  // With the 1/n normalization, duplicating the minority direction of an
  // unbalanced base raises C. Kept as a pinned counterexample.
  Eigen::MatrixXd base(2, 3);
  base << 1, 1, 0, 0, 0, 1;
  const double gain = marginal_gain(from(base), oracle::basis(2, 1), CodingRateParams{0.5, 0.0});
  EXPECT_NEAR(gain, oracle::gain_eig(base, oracle::basis(2, 1), 0.5), 1e-12);
  EXPECT_GT(gain, 0.02);
}

TEST(MarginalGain, Examples) {
  EmbeddingMatrix base = from(oracle::basis(2, 0));
  EXPECT_NEAR(marginal_gain(base, oracle::basis(2, 0), kUnitEps), 0.0, 1e-12);
  EXPECT_NEAR(marginal_gain(base, oracle::basis(2, 1), kUnitEps), std::log(1.5) - 0.5 * std::log(2.0), 1e-12);
  EXPECT_NEAR(marginal_gain(EmbeddingMatrix(2), oracle::basis(2, 1), kUnitEps), 0.5 * std::log(2.0), 1e-12);
}

TEST(MarginalGain, DimensionMismatchAndNonUnitCandidate) {
  EmbeddingMatrix base = from(oracle::basis(2, 0));
  EXPECT_THROW(marginal_gain(base, oracle::basis(3, 0)), Error);
  EXPECT_THROW(marginal_gain(base, Eigen::Vector2d(1.0, 1.0)), Error);
}

TEST(MarginalGain, BatchFastPathMatchesNaive) {
  std::mt19937_64 rng(29);
  std::uniform_int_distribution<int> dim(1, 64), count(0, 32);
  for (int trial = 0; trial < 200; ++trial) {
    const int d = dim(rng);
    const auto base = oracle::random_unit_columns(rng, d, count(rng));
    const auto cands = oracle::random_unit_columns(rng, d, 6);
    // Include an exact duplicate of a base column when possible.
    Eigen::MatrixXd all(d, 7);
    all.leftCols(6) = cands;
    all.col(6) = base.cols() > 0 ? Eigen::VectorXd(base.col(0)) : Eigen::VectorXd(cands.col(0));
    const CodingRateParams p{0.5, 1e-10};
    const auto fast = batch_marginal_gains(base, all, p);
    const auto base_m = from(base);
    for (Eigen::Index j = 0; j < all.cols(); ++j) {
      EXPECT_NEAR(fast[static_cast<std::size_t>(j)], marginal_gain(base_m, all.col(j), p), 1e-9);
      EXPECT_NEAR(fast[static_cast<std::size_t>(j)], oracle::gain_eig(base, all.col(j), p.epsilon), 1e-9);
    }
  }
}

TEST(EmbeddingMatrix, AppendNormalizesAndChecksDimension) {
  EmbeddingMatrix e(3);
  e.append(Eigen::Vector3d(0, 2, 0));
  EXPECT_EQ(e.size(), 1);
  EXPECT_NEAR(e.matrix()(1, 0), 1.0, 1e-15);
  EXPECT_THROW(e.append(Eigen::Vector2d(1, 0)), Error);
}

}  // namespace
}  // namespace rubriclearn
