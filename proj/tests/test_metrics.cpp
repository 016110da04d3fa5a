/*
 * Copyright 2026 The gancst Authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <gtest/gtest.h>

#include <set>
#include <vector>

#include "gancst/knn.hpp"
#include "gancst/metrics.hpp"
#include "gancst/rng.hpp"
#include "oracles.hpp"

namespace gancst {
namespace {

Matrix mat(std::initializer_list<std::initializer_list<double>> rows) {
  Matrix m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (const double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

oracle::Rows to_rows(const Matrix& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

TEST(Sweep, DefaultHasFourHundredPoints) {
  const CalibrationSweep s;
  EXPECT_EQ(s.count(), 400u);
  EXPECT_EQ(s.value(0), -2.0);
  EXPECT_NEAR(s.value(399), 1.99, 1e-12);
  EXPECT_THROW((CalibrationSweep{1.0, 1.0, 0.1}.count()), ConfigError);
  EXPECT_THROW((CalibrationSweep{0.0, 1.0, 0.0}.count()), ConfigError);
}

TEST(Top1, Examples) {
  const std::vector<int> y{0, 1};
  EXPECT_EQ(top1_per_class(mat({{1, 0}, {0, 1}}), y), 100.0);
  // Class A 2/2, class B 0/2.
  const std::vector<int> y4{0, 0, 1, 1};
  EXPECT_EQ(top1_per_class(mat({{1, 0}, {1, 0}, {1, 0}, {1, 0}}), y4), 50.0);
  // Uniform scores: every sample predicted as the smallest column.
  const std::vector<int> y3{0, 1, 2, 0, 1, 2};
  EXPECT_NEAR(top1_per_class(Matrix::Constant(6, 3, 0.2), y3), 100.0 / 3.0, 1e-12);
}

TEST(Top1, RestrictedCandidatesAndErrors) {
  const Matrix s = mat({{5, 1, 2}, {5, 3, 2}});
  EXPECT_EQ(top1_per_class(s, std::vector<int>{2, 2}, std::vector<int>{1, 2}), 50.0);
  EXPECT_THROW(top1_per_class(s, std::vector<int>{0, 1}, std::vector<int>{1, 2}), ConfigError);
  EXPECT_THROW(top1_per_class(s, std::vector<int>{0, 1}, std::vector<int>{}), ConfigError);
  EXPECT_THROW(per_class_accuracy(std::vector<int>{}, std::vector<int>{}), ConfigError);
}

TEST(GeneralizedAccuracy, TieCaseIsFiftyPercent) {
  // A seen and an unseen sample with tied scores: exactly one of them is
  // right at every lambda (ties go to the seen column).
  const std::vector<int> y{0, 1};
  EXPECT_NEAR(generalized_accuracy(mat({{1.0, 1.0}, {1.0, 1.0}}), y, 1), 50.0, 1e-9);
  // Alone, the seen sample is right for lambda <= 0: 201 of 400 points.
  EXPECT_NEAR(generalized_accuracy(mat({{1.0, 1.0}}), std::vector<int>{0}, 1), 50.25, 1e-9);
}

TEST(GeneralizedAccuracy, WideMarginIsSweepInvariant) {
  const std::vector<int> y{0, 1, 2};
  const Matrix s = mat({{10, 0, 0}, {0, 10, 0}, {0, 0, 10}});
  EXPECT_EQ(generalized_accuracy(s, y, 2), 100.0);
  EXPECT_THROW(generalized_accuracy(s, y, 3), ConfigError);
}

TEST(GeneralizedAccuracy, MatchesCountedSweepOnTwoSampleCases) {
  Rng rng(12);
  for (int trial = 0; trial < 200; ++trial) {
    Matrix s(2, 2);
    for (Eigen::Index i = 0; i < 4; ++i) s.data()[i] = static_cast<double>(rng.index(9)) / 4.0 - 1.0;
    const std::vector<int> y{static_cast<int>(rng.index(2)), static_cast<int>(rng.index(2))};
    EXPECT_NEAR(generalized_accuracy(s, y, 1), oracle::generalized_accuracy(to_rows(s), y, 1, -2, 2, 0.01), 1e-9);
  }
}

TEST(Suc, LimitsOfTheSweep) {
  const Matrix s = mat({{1, 0}, {0, 1}});
  const std::vector<int> y{0, 1};
  const auto pts = suc_curve(s, y, 1, CalibrationSweep{-5, 5, 0.5});
  // lambda = -5: everything seen; lambda = 4.5: everything unseen.
  EXPECT_EQ(pts.front(), (SucPoint{0.0, 1.0}));
  EXPECT_EQ(pts.back(), (SucPoint{1.0, 0.0}));
  EXPECT_THROW(suc_curve(s, std::vector<int>{0, 0}, 1), ConfigError);
}

TEST(Suc, MatchesBruteForceEnumeration) {
  Rng rng(13);
  for (int trial = 0; trial < 100; ++trial) {
    Matrix s(4, 3);
    for (Eigen::Index i = 0; i < s.size(); ++i) s.data()[i] = rng.uniform() * 3.0 - 1.5;
    const std::vector<int> y{0, 1, 2, 2};
    const auto pts = suc_curve(s, y, 2);
    std::set<std::pair<double, double>> got;
    for (const auto& p : pts) got.insert({p.unseen, p.seen});
    EXPECT_EQ(got, oracle::suc_points(to_rows(s), y, 2, -2, 2, 0.01));
    for (std::size_t i = 1; i < pts.size(); ++i) EXPECT_LE(pts[i - 1].unseen, pts[i].unseen);
  }
}

TEST(Ausuc, Examples) {
  EXPECT_EQ(ausuc({{0, 1}, {1, 0}}), 0.5);
  EXPECT_EQ(ausuc({{0, 1}, {1, 1}}), 1.0);
  EXPECT_NEAR(ausuc({{0, 0.8}, {0.5, 0.6}, {1.0, 0.2}}), 0.55, 1e-15);
  EXPECT_EQ(ausuc({{1, 0}, {0, 1}}), 0.5);  // order-insensitive
  EXPECT_THROW(ausuc({{0, 1}}), UsageError);
}

TEST(Gzsl, Examples) {
  EXPECT_EQ(harmonic_mean(60, 30), 40.0);
  EXPECT_EQ(harmonic_mean(100, 0), 0.0);
  EXPECT_EQ(harmonic_mean(0, 0), 0.0);
  const auto perfect = gzsl_suh(mat({{1, 0, 0}, {0, 1, 0}, {0, 0, 1}}), std::vector<int>{0, 1, 2}, 2);
  EXPECT_EQ(perfect.seen, 100.0);
  EXPECT_EQ(perfect.unseen, 100.0);
  EXPECT_EQ(perfect.harmonic, 100.0);
  const auto biased = gzsl_suh(mat({{1, 0}, {1, 0}}), std::vector<int>{0, 1}, 1);
  EXPECT_EQ(biased.seen, 100.0);
  EXPECT_EQ(biased.unseen, 0.0);
  EXPECT_EQ(biased.harmonic, 0.0);
}

TEST(Retrieval, CountArithmetic) {
  EXPECT_EQ(retrieval_count(0.25, 4), 1u);
  EXPECT_EQ(retrieval_count(0.25, 5), 2u);
  EXPECT_EQ(retrieval_count(0.5, 1), 1u);
  EXPECT_EQ(retrieval_count(1.0, 7), 7u);
}

TEST(Retrieval, PerfectSeparationAndToyConfusion) {
  const Matrix q = mat({{0, 0}, {10, 0}});
  const Matrix images = mat({{0, 1}, {1, 0}, {10, 1}, {9, 0}});
  const std::vector<int> y{0, 0, 1, 1};
  EXPECT_EQ(retrieval_map(q, images, y, 1.0), 100.0);
  // Class 1 image placed next to query 0: class 0 retrieves it second.
  const Matrix confused = mat({{0, 1}, {5, 0}, {10, 1}, {0.5, 0}});
  const double expected = (0.5 + 0.5) / 2.0 * 100.0;
  EXPECT_DOUBLE_EQ(retrieval_map(q, confused, y, 1.0), expected);
  EXPECT_DOUBLE_EQ(retrieval_map(q, confused, y, 1.0), oracle::retrieval_map(to_rows(q), to_rows(confused), y, 1.0));
  EXPECT_THROW(retrieval_map(q, images, y, 0.0), ConfigError);
  EXPECT_THROW(retrieval_map(q, images, std::vector<int>{0, 0, 0, 0}, 1.0), ConfigError);
}

TEST(Retrieval, MatchesBruteForceRanking) {
  Rng rng(14);
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t classes = 2 + rng.index(3);
    Matrix q(static_cast<Eigen::Index>(classes), 3);
    for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = rng.normal();
    std::vector<int> y;
    for (std::size_t c = 0; c < classes; ++c) {
      for (std::size_t k = 0, n = 1 + rng.index(5); k < n; ++k) y.push_back(static_cast<int>(c));
    }
    Matrix images(static_cast<Eigen::Index>(y.size()), 3);
    for (Eigen::Index i = 0; i < images.rows(); ++i) {
      for (Eigen::Index d = 0; d < 3; ++d) images(i, d) = q(y[static_cast<std::size_t>(i)], d) + rng.normal(0, 1.0);
    }
    for (const double ratio : {0.25, 0.5, 1.0}) {
      EXPECT_NEAR(retrieval_map(q, images, y, ratio), oracle::retrieval_map(to_rows(q), to_rows(images), y, ratio),
                  1e-12);
    }
  }
}

TEST(Knn, VoteFractionsAndTies) {
  const Matrix refs = mat({{0}, {1}, {2}, {10}, {11}});
  const KnnClassifier knn(refs, {0, 0, 1, 1, 1}, 3, 2);
  const Matrix p = knn.predict_proba(mat({{0.4}, {10.5}}));
  EXPECT_NEAR(p(0, 0), 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(p(1, 1), 1.0, 1e-15);
  const auto pred = knn.predict(mat({{0.4}}));
  EXPECT_EQ(pred[0].label, 0);
  EXPECT_NEAR(pred[0].confidence, 2.0 / 3.0, 1e-15);
}

}  // namespace
}  // namespace gancst
