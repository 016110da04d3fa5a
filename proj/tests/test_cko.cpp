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

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>
#include <vector>

#include "gancst/cko.hpp"
#include "gancst/rng.hpp"
#include "gancst/text.hpp"

namespace gancst {
namespace {

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), out.data());
  return out;
}

EmbeddingTable toy_table() {
  EmbeddingTable t;
  t.add("albatross", vec({1, 0}));
  t.add("laysan", vec({1, 1}));
  t.add("footed", vec({0, 1}));
  t.add("black", vec({3, 1}));
  return t;
}

TEST(ClassNameTokens, SplitsOnSpaceHyphenUnderscore) {
  EXPECT_EQ(class_name_tokens("Black-footed Albatross"),
            (std::vector<std::string>{"black", "footed", "albatross"}));
  EXPECT_EQ(class_name_tokens("Laysan_Albatross"), (std::vector<std::string>{"laysan", "albatross"}));
}

TEST(EmbedClassName, SingleTokenIsExactVector) {
  EXPECT_EQ(embed_class_name(toy_table(), "Albatross"), vec({1, 0}));
}

TEST(EmbedClassName, TwoTokensAverage) {
  EXPECT_EQ(embed_class_name(toy_table(), "Laysan Albatross"), vec({1.0, 0.5}));
}

TEST(EmbedClassName, UnknownTokensSkipped) {
  EXPECT_EQ(embed_class_name(toy_table(), "Sooty Albatross"), vec({1, 0}));
}

TEST(EmbedClassName, AllUnknownNamesTheClass) {
  try {
    embed_class_name(toy_table(), "Cactus Wren");
    FAIL() << "expected MissingEmbeddingError";
  } catch (const MissingEmbeddingError& e) {
    EXPECT_EQ(e.class_name(), "Cactus Wren");
    EXPECT_NE(std::string(e.what()).find("Cactus Wren"), std::string::npos);
  }
  EXPECT_THROW(embed_class_name(EmbeddingTable(), "Albatross"), ConfigError);
}

TEST(SimilarityMatrix, HandCosineValues) {
  const auto sm = similarity_matrix(toy_table(), {"albatross", "laysan", "footed", "albatross"});
  EXPECT_DOUBLE_EQ(sm(0, 3), 1.0);             // identical names
  EXPECT_DOUBLE_EQ(sm(0, 2), 0.0);             // orthogonal
  EXPECT_NEAR(sm(0, 1), 1.0 / std::sqrt(2.0), 1e-15);  // (1,0) vs (1,1)
  for (Eigen::Index i = 0; i < sm.rows(); ++i) {
    EXPECT_EQ(sm(i, i), 1.0);
    for (Eigen::Index j = 0; j < sm.cols(); ++j) {
      EXPECT_EQ(sm(i, j), sm(j, i));
      EXPECT_LE(std::abs(sm(i, j)), 1.0);
    }
  }
}

TEST(SimilarityMatrix, NegEuclideanOption) {
  const auto sm = similarity_matrix(toy_table(), {"albatross", "footed"}, SimilarityKind::kNegEuclidean);
  EXPECT_DOUBLE_EQ(sm(0, 1), -std::sqrt(2.0));
  EXPECT_EQ(sm(0, 0), 0.0);
  EXPECT_THROW(similarity_from_string("manhattan"), ConfigError);
}

TEST(SimilarityMatrix, MissingEmbeddingPropagates) {
  EXPECT_THROW(similarity_matrix(toy_table(), {"albatross", "wren"}), MissingEmbeddingError);
}

std::vector<ClassRecord> records(std::size_t n) {
  std::vector<ClassRecord> r;
  for (std::size_t i = 0; i < n; ++i) {
    r.push_back({static_cast<int>(i), "class " + std::to_string(i), "article " + std::to_string(i), {}});
  }
  return r;
}

TEST(Overlay, KZeroIsIdentity) {
  const auto out = overlay(records(3), Matrix::Identity(3, 3), 0);
  for (const auto& r : out) EXPECT_EQ(r.article_overlay, r.article_original);
}

TEST(Overlay, TopOneOfThree) {
  Matrix sm(3, 3);
  sm << 1, 0.9, 0.2, 0.9, 1, 0.5, 0.2, 0.5, 1;
  const auto out = overlay(records(3), sm, 1);
  EXPECT_EQ(out[0].article_overlay, "article 0\narticle 1");
  EXPECT_EQ(out[1].article_overlay, "article 1\narticle 0");
  EXPECT_EQ(out[2].article_overlay, "article 2\narticle 1");
}

TEST(Overlay, FullOverlayContainsEveryArticleInDescendingOrder) {
  Matrix sm(4, 4);
  sm << 1, 0.1, 0.7, 0.4, 0.1, 1, 0.2, 0.3, 0.7, 0.2, 1, 0.6, 0.4, 0.3, 0.6, 1;
  const auto out = overlay(records(4), sm, 3);
  EXPECT_EQ(out[0].article_overlay, "article 0\narticle 2\narticle 3\narticle 1");
  for (const auto& r : out) {
    EXPECT_EQ(r.article_overlay.rfind(r.article_original, 0), 0u);
    for (int j = 0; j < 4; ++j) EXPECT_NE(r.article_overlay.find("article " + std::to_string(j)), std::string::npos);
  }
}

TEST(Overlay, TiesBreakByAscendingClassId) {
  std::vector<ClassRecord> r = records(4);
  r[1].class_id = 30;
  r[2].class_id = 20;
  r[3].class_id = 10;
  Matrix sm = Matrix::Constant(4, 4, 0.5);
  sm.diagonal().setOnes();
  const std::vector<int> ids{0, 30, 20, 10};
  EXPECT_EQ(top_k_neighbors(sm, 0, 2, ids), (std::vector<std::size_t>{3, 2}));
}

TEST(Overlay, KTooLargeIsConfigError) {
  EXPECT_THROW(overlay(records(3), Matrix::Identity(3, 3), 3), ConfigError);
  EXPECT_THROW(overlay(records(3), Matrix::Identity(2, 2), 1), ConfigError);
}

TEST(Overlay, TokenCountNeverShrinks) {
  Rng rng(3);
  std::vector<ClassRecord> r = records(5);
  for (auto& rec : r) rec.article_original = "word " + std::to_string(rng.index(100)) + " bird wing";
  Matrix sm = Matrix::Random(5, 5);
  sm = (sm + sm.transpose()).eval();
  for (std::size_t k = 0; k < 5; ++k) {
    for (const auto& rec : overlay(r, sm, k)) {
      EXPECT_GE(tokenize(rec.article_overlay).size(), tokenize(rec.article_original).size());
    }
  }
}

// Brute force: sort the other indices by (-similarity, id).
std::vector<std::size_t> brute_top_k(const Matrix& sm, std::size_t row, std::size_t k, const std::vector<int>& ids) {
  std::vector<std::tuple<double, int, std::size_t>> all;
  for (std::size_t j = 0; j < static_cast<std::size_t>(sm.cols()); ++j) {
    if (j != row) all.emplace_back(-sm(static_cast<Eigen::Index>(row), static_cast<Eigen::Index>(j)), ids[j], j);
  }
  std::sort(all.begin(), all.end());
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(std::get<2>(all[i]));
  return out;
}

TEST(TopK, RandomMatricesMatchBruteForceAndExcludeSelf) {
  Rng rng(77);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 2 + rng.index(8);
    Matrix sm(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    // Coarse values so ties occur often.
    for (Eigen::Index i = 0; i < sm.size(); ++i) sm.data()[i] = static_cast<double>(rng.index(5)) / 4.0;
    std::vector<int> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    rng.shuffle(ids);
    const std::size_t k = rng.index(n);
    for (std::size_t row = 0; row < n; ++row) {
      const auto got = top_k_neighbors(sm, row, k, ids);
      EXPECT_EQ(got, brute_top_k(sm, row, k, ids));
      EXPECT_EQ(std::count(got.begin(), got.end(), row), 0);
    }
  }
}

TEST(TopK, CosineSelectionInvariantUnderPositiveScaling) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    EmbeddingTable a, b;
    std::vector<std::string> names;
    const double scale = 0.01 + 100.0 * rng.uniform();
    for (int i = 0; i < 6; ++i) {
      Vector v(4);
      for (Eigen::Index d = 0; d < 4; ++d) v[d] = rng.normal();
      const std::string w = "w" + std::to_string(i);
      a.add(w, v);
      b.add(w, scale * v);
      names.push_back(w);
    }
    const auto sa = similarity_matrix(a, names);
    const auto sb = similarity_matrix(b, names);
    const std::vector<int> ids{0, 1, 2, 3, 4, 5};
    for (std::size_t row = 0; row < 6; ++row) {
      for (std::size_t k = 0; k < 6; ++k) {
        const auto x = top_k_neighbors(sa, row, k, ids);
        const auto y = top_k_neighbors(sb, row, k, ids);
        EXPECT_EQ(std::set<std::size_t>(x.begin(), x.end()), std::set<std::size_t>(y.begin(), y.end()));
      }
    }
  }
}

}  // namespace
}  // namespace gancst
