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

#include <cmath>
#include <limits>
#include <vector>

#include "gancst/commands.hpp"
#include "gancst/gan.hpp"
#include "gancst/gradcheck.hpp"
#include "oracles.hpp"
#include "tiny_setup.hpp"

namespace gancst {
namespace {

using testing::tiny_setup;

Matrix row(std::initializer_list<double> v) {
  Matrix m(1, static_cast<Eigen::Index>(v.size()));
  std::copy(v.begin(), v.end(), m.data());
  return m;
}

GeneratorConfig small_generator(NoiseMode mode = NoiseMode::kAdditive) {
  GeneratorConfig c;
  c.semantic_dim = 5;
  c.reduce_dim = 6;
  c.noise_dim = mode == NoiseMode::kAdditive ? 0 : 3;
  c.hidden_dim = 7;
  c.visual_dim = 4;
  c.noise_sigma = 1.0;
  c.noise_mode = mode;
  return c;
}

TEST(Generate, ZeroNoiseIsPlainForwardPass) {
  Rng rng(1);
  const auto g = Generator::make(small_generator(), rng);
  const Matrix s = detail::random_matrix(3, 5, rng);
  const Matrix z = Matrix::Zero(3, 6);
  const Matrix out = g.generate(s, z);
  EXPECT_EQ(out, mlp_apply(g.body, mlp_apply(g.reduce, s)));
  EXPECT_EQ(out, g.generate(s, z));
}

TEST(Generate, NoiseChangesOutputAndRowsAreIndependent) {
  for (const auto mode : {NoiseMode::kAdditive, NoiseMode::kConcat}) {
    Rng rng(2);
    const auto g = Generator::make(small_generator(mode), rng);
    Matrix s(2, 5);
    s.row(0) = detail::random_matrix(1, 5, rng);
    s.row(1) = s.row(0);
    const Matrix z1 = g.sample_noise(1, rng);
    const Matrix z2 = g.sample_noise(1, rng);
    Matrix zz(2, z1.cols());
    zz.row(0) = z1;
    zz.row(1) = z1;
    const Matrix same = g.generate(s, zz);
    EXPECT_EQ(same.row(0), same.row(1));
    EXPECT_NE(g.generate(s.topRows(1), z1), g.generate(s.topRows(1), z2));
  }
}

TEST(Generate, OutputInsideClosedUnitBox) {
  Rng rng(3);
  const auto g = Generator::make(small_generator(), rng);
  const Matrix s = detail::random_matrix(200, 5, rng, 10.0);
  const Matrix out = g.generate(s, g.sample_noise(200, rng));
  // tanh saturates to exactly +-1 in double precision for large inputs.
  EXPECT_GE(out.minCoeff(), -1.0);
  EXPECT_LE(out.maxCoeff(), 1.0);
  EXPECT_EQ(out.rows(), 200);
  EXPECT_EQ(out.cols(), 4);
}

TEST(Generate, ShapeErrors) {
  Rng rng(4);
  const auto g = Generator::make(small_generator(), rng);
  EXPECT_THROW(g.generate(Matrix::Zero(2, 5), Matrix::Zero(3, 6)), UsageError);
  EXPECT_THROW(g.generate(Matrix::Zero(2, 4), Matrix::Zero(2, 6)), UsageError);
  EXPECT_THROW(g.generate(Matrix::Zero(2, 5), Matrix::Zero(2, 5)), UsageError);
  GeneratorConfig bad = small_generator();
  bad.noise_dim = 3;
  EXPECT_THROW(Generator::make(bad, rng), ConfigError);
}

TEST(TripletLoss, HandExamples) {
  EXPECT_DOUBLE_EQ(triplet_loss(row({0, 0}), {row({1, 0})}, {row({3, 0})}, 0.5).value, 0.0);
  EXPECT_DOUBLE_EQ(triplet_loss(row({0, 0}), {row({2, 0})}, {row({1, 0})}, 0.5).value, 1.5);
  // Equal mean distances, zero margin.
  EXPECT_EQ(triplet_loss(row({0, 0}), {row({0, 2})}, {row({2, 0})}, 0.0).value, 0.0);
}

TEST(TripletLoss, EmptySetsAreUsageErrors) {
  EXPECT_THROW(triplet_loss(row({0, 0}), {Matrix(0, 2)}, {row({1, 0})}, 0.1), UsageError);
  EXPECT_THROW(triplet_loss(row({0, 0}), {row({1, 0})}, {Matrix(0, 2)}, 0.1), UsageError);
  EXPECT_THROW(triplet_loss(row({0, 0}), {}, {}, 0.1), UsageError);
}

oracle::Rows to_rows(const Matrix& m) {
  oracle::Rows out(static_cast<std::size_t>(m.rows()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) out[static_cast<std::size_t>(r)].assign(m.row(r).begin(), m.row(r).end());
  return out;
}

TEST(TripletLoss, MatchesReferenceOnRandomInstances) {
  Rng rng(31);
  for (int trial = 0; trial < 200; ++trial) {
    const auto c = 1 + rng.index(4);
    const auto dim = static_cast<Eigen::Index>(1 + rng.index(8));
    const Matrix anchors = detail::random_matrix(static_cast<Eigen::Index>(c), dim, rng);
    std::vector<Matrix> pos, neg;
    std::vector<oracle::Rows> opos, oneg;
    for (std::size_t i = 0; i < c; ++i) {
      pos.push_back(detail::random_matrix(static_cast<Eigen::Index>(1 + rng.index(5)), dim, rng));
      neg.push_back(detail::random_matrix(static_cast<Eigen::Index>(1 + rng.index(5)), dim, rng));
      opos.push_back(to_rows(pos.back()));
      oneg.push_back(to_rows(neg.back()));
    }
    const double margin = rng.uniform() * 2.0;
    const double got = triplet_loss(anchors, pos, neg, margin).value;
    EXPECT_NEAR(got, oracle::triplet(to_rows(anchors), opos, oneg, margin), 1e-12);
    EXPECT_GE(got, 0.0);
  }
}

TEST(CrossEntropy, UniformLogitsGiveLogC) {
  const std::vector<int> y{0, 2, 1};
  const auto r = cross_entropy(Matrix::Constant(3, 4, 0.3), y);
  EXPECT_NEAR(r.value, std::log(4.0), 1e-15);
  EXPECT_THROW(cross_entropy(Matrix::Zero(1, 3), std::vector<int>{3}), UsageError);
  EXPECT_THROW(cross_entropy(Matrix::Zero(2, 3), std::vector<int>{0}), UsageError);
}

TEST(GeneratorLoss, Examples) {
  GeneratorLossTerms t;
  t.ce_fake = t.ce_real = std::log(5.0);
  EXPECT_DOUBLE_EQ(generator_loss(t, 1.0), std::log(5.0));
  t.triplet = 3.0;
  EXPECT_DOUBLE_EQ(generator_loss(t, 0.0), std::log(5.0));
  GeneratorLossTerms zero;
  zero.critic_fake = zero.critic_real = 2.5;
  EXPECT_EQ(generator_loss(zero, 1.0), 0.0);
  EXPECT_EQ(generator_loss(zero, 1.0, CriticSign::kAsWritten), 0.0);
}

TEST(GeneratorLoss, SignConventionsAndConstantShift) {
  GeneratorLossTerms t{0.25, 1.5, 0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(generator_loss(t, 1.0, CriticSign::kAdversarial), 1.25);
  EXPECT_DOUBLE_EQ(generator_loss(t, 1.0, CriticSign::kAsWritten), -1.25);
  GeneratorLossTerms shifted{t.critic_fake + 7.0, t.critic_real + 7.0, 0.0, 0.0, 0.0};
  EXPECT_DOUBLE_EQ(generator_loss(shifted, 1.0), generator_loss(t, 1.0));
  EXPECT_THROW(critic_sign_from_string("backwards"), ConfigError);
}

Discriminator identity_discriminator() {
  DiscriminatorConfig c{2, 2, 2};
  Rng rng(0);
  auto d = Discriminator::make(c, rng);
  d.trunk.layers[0].weight = Matrix::Identity(2, 2);
  d.trunk.layers[0].bias.setZero();
  d.critic_head.layers[0].weight = Matrix::Zero(2, 1);
  d.critic_head.layers[0].weight(0, 0) = 1.0;
  d.critic_head.layers[0].bias.setZero();
  d.class_head.layers[0].weight = Matrix::Zero(2, 2);
  d.class_head.layers[0].weight(0, 0) = 10.0;
  d.class_head.layers[0].bias.setZero();
  return d;
}

TEST(DiscriminatorLoss, ConstantCriticHasUnitPenalty) {
  Rng rng(5);
  auto d = Discriminator::make({3, 4, 3}, rng);
  d.critic_head.layers[0].weight.setZero();
  d.critic_head.layers[0].bias.setConstant(0.7);
  const Matrix real = detail::random_matrix(4, 3, rng);
  const Matrix fake = detail::random_matrix(4, 3, rng);
  const std::vector<int> y{0, 1, 2, 1};
  const auto r = discriminator_loss(d, real, fake, y, 0.5 * (real + fake), 10.0);
  EXPECT_EQ(r.wasserstein, 0.0);
  EXPECT_EQ(r.penalty, 1.0);
  const double ce = 0.5 * (cross_entropy(d.forward(fake).logits, y).value + cross_entropy(d.forward(real).logits, y).value);
  EXPECT_DOUBLE_EQ(r.value, 10.0 + ce);
  const auto no_gp = discriminator_loss(d, real, fake, y, 0.5 * (real + fake), 0.0);
  EXPECT_DOUBLE_EQ(no_gp.value, ce);
}

TEST(DiscriminatorLoss, HandComputedSeparatingCritic) {
  // Identity ReLU trunk, critic = first coordinate, class logits (10 x0, 0).
  const auto d = identity_discriminator();
  const Matrix real = row({2, 0});
  const Matrix fake = row({1, 0});
  const std::vector<int> y{0};
  const double expected = (1.0 - 2.0) + 0.5 * (std::log1p(std::exp(-10.0)) + std::log1p(std::exp(-20.0)));
  const auto r = discriminator_loss(d, real, fake, y, row({1.5, 0}), 0.0);
  EXPECT_DOUBLE_EQ(r.value, expected);
  // The critic gradient at the interpolate is (1, 0): zero penalty.
  const auto gp = discriminator_loss(d, real, fake, y, row({1.5, 0}), 10.0);
  EXPECT_EQ(gp.penalty, 0.0);
  EXPECT_DOUBLE_EQ(gp.value, expected);
}

TEST(DiscriminatorLoss, ShapeAndLabelErrors) {
  const auto d = identity_discriminator();
  EXPECT_THROW(discriminator_loss(d, row({1, 0}), row({1, 0}), std::vector<int>{2}, row({1, 0}), 0.0), UsageError);
  EXPECT_THROW(discriminator_loss(d, row({1, 0}), Matrix::Zero(2, 2), std::vector<int>{0}, row({1, 0}), 0.0),
               UsageError);
}

// Input gradient of the critic by central differences.
Matrix numeric_critic_gradient(const Discriminator& d, const Matrix& points) {
  Matrix g(points.rows(), points.cols());
  constexpr double h = 1e-6;
  for (Eigen::Index i = 0; i < points.rows(); ++i) {
    for (Eigen::Index j = 0; j < points.cols(); ++j) {
      Matrix p = points.row(i);
      p(0, j) += h;
      const double up = d.forward(p).critic[0];
      p(0, j) -= 2 * h;
      const double down = d.forward(p).critic[0];
      g(i, j) = (up - down) / (2 * h);
    }
  }
  return g;
}

TEST(GradientPenalty, ValueMatchesNumericInputGradient) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    const auto d = Discriminator::make({4, 6, 3}, rng);
    const Matrix pts = detail::random_matrix(5, 4, rng);
    const Matrix g = numeric_critic_gradient(d, pts);
    double expected = 0.0;
    for (Eigen::Index i = 0; i < g.rows(); ++i) expected += std::pow(g.row(i).norm() - 1.0, 2) / 5.0;
    EXPECT_NEAR(gradient_penalty(d, pts).value, expected, 1e-7) << "seed " << seed;
  }
}

TEST(GradientPenalty, ParameterGradientsMatchFiniteDifferences) {
  int checked = 0;
  for (std::uint64_t seed = 1; checked < 20; ++seed) {
    Rng rng(seed);
    auto d = Discriminator::make({3, 5, 2}, rng);
    const Matrix pts = detail::random_matrix(4, 3, rng);
    if (detail::kink_distance(d.trunk, pts) < detail::kKinkClearance) continue;
    ++checked;
    auto r = gradient_penalty(d, pts);
    auto& w1 = d.trunk.layers[0].weight;
    auto& w2 = d.critic_head.layers[0].weight;
    const auto res = gradient_check(
        {{w1.data(), static_cast<std::size_t>(w1.size())}, {w2.data(), static_cast<std::size_t>(w2.size())}},
        {{r.d_trunk_weight.data(), static_cast<std::size_t>(r.d_trunk_weight.size())},
         {r.d_critic_weight.data(), static_cast<std::size_t>(r.d_critic_weight.size())}},
        [&] { return gradient_penalty(d, pts).value; });
    EXPECT_LT(res.max_relative_error, 1e-4) << "seed " << seed;
  }
}

TEST(GradientSuite, AllBackwardPassesMatchFiniteDifferences) {
  for (const auto& c : run_gradient_suite(1, 20)) {
    EXPECT_TRUE(c.passed()) << c.name << " seed " << c.seed << " error " << c.result.max_relative_error;
  }
  for (std::uint64_t s = 1; s <= 10; ++s) {
    EXPECT_TRUE(check_generator_loss_gradients(s, CriticSign::kAsWritten).passed()) << s;
    EXPECT_TRUE(check_discriminator_loss_gradients(s, 10.0).passed()) << s;
  }
}

TEST(ExpandHead, OldLogitsBitIdenticalAndShrinkRejected) {
  Rng rng(9);
  auto d = Discriminator::make({6, 8, 3}, rng);
  const Matrix x = detail::random_matrix(10, 6, rng);
  const Matrix before = d.forward(x).logits;
  const Vector critic_before = d.forward(x).critic;
  expand_classifier_head(d, 5, rng);
  const auto after = d.forward(x);
  EXPECT_EQ(after.logits.cols(), 5);
  EXPECT_EQ(Matrix(after.logits.leftCols(3)), before);
  EXPECT_EQ(after.critic, critic_before);
  EXPECT_TRUE(d.class_head.layers[0].bias.tail(2).isZero(0.0));
  EXPECT_THROW(expand_classifier_head(d, 4, rng), UsageError);
}

TEST(TrainGan, ZeroStepsReturnsInitialModel) {
  const auto t = tiny_setup(0);
  const auto& d = t.prepared.data;
  const auto r = train_gan(t.init, d.train, d.val_x, d.val_y, d.semantics, d.seen_count, t.tc, 1);
  EXPECT_EQ(r.model, t.init);
  EXPECT_TRUE(r.log.empty());
}

TEST(TrainGan, SameSeedSameLogAndParameters) {
  const auto t = tiny_setup(60);
  const auto& d = t.prepared.data;
  const auto a = train_gan(t.init, d.train, d.val_x, d.val_y, d.semantics, d.seen_count, t.tc, 5);
  const auto b = train_gan(t.init, d.train, d.val_x, d.val_y, d.semantics, d.seen_count, t.tc, 5);
  EXPECT_EQ(a.log, b.log);
  EXPECT_EQ(a.model, b.model);
  ASSERT_EQ(a.log.size(), 3u);
  EXPECT_EQ(a.log.back().step, 60u);
  const auto c = train_gan(t.init, d.train, d.val_x, d.val_y, d.semantics, d.seen_count, t.tc, 6);
  EXPECT_NE(a.log, c.log);
}

TEST(TrainGan, TripletLossDecreases) {
  auto t = tiny_setup(500);
  const auto& d = t.prepared.data;
  const auto r = train_gan(t.init, d.train, Matrix(0, 8), {}, d.semantics, d.seen_count, t.tc, 2);
  EXPECT_EQ(r.steps_run, 500u);
  EXPECT_LT(r.last_triplet, r.first_triplet);
}

TEST(TrainGan, PatienceStopsEarly) {
  auto t = tiny_setup(2000);
  t.tc.patience = 1;
  const auto& d = t.prepared.data;
  const auto r = train_gan(t.init, d.train, d.val_x, d.val_y, d.semantics, d.seen_count, t.tc, 2);
  EXPECT_LT(r.steps_run, 2000u);
  // Stops on the second consecutive evaluation without improvement.
  ASSERT_GE(r.log.size(), 3u);
  const auto n = r.log.size();
  EXPECT_LE(r.log[n - 1].val_gacc, r.best_gacc);
  EXPECT_LE(r.log[n - 2].val_gacc, r.best_gacc);
}

TEST(TrainGan, NonFiniteLossReportsStep) {
  auto t = tiny_setup(10);
  auto train = t.prepared.data.train;
  train.features(0, 0) = std::numeric_limits<double>::quiet_NaN();
  train.features.col(0).setConstant(std::numeric_limits<double>::quiet_NaN());
  const auto& d = t.prepared.data;
  try {
    train_gan(t.init, train, d.val_x, d.val_y, d.semantics, d.seen_count, t.tc, 1);
    FAIL() << "expected NonFiniteError";
  } catch (const NonFiniteError& e) {
    EXPECT_EQ(e.step(), 1u);
    EXPECT_NE(std::string(e.what()).find("step 1"), std::string::npos);
  }
}

}  // namespace
}  // namespace gancst
