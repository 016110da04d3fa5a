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

#include <vector>

#include "gancst/ssl.hpp"
#include "tiny_setup.hpp"

namespace gancst {
namespace {

using testing::tiny_setup;

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

TEST(KnnPredict, Examples) {
  const KnnClassifier one(mat({{0, 0}, {5, 5}}), {0, 1}, 1, 2);
  const auto p = one.predict(mat({{5, 5}}));
  EXPECT_EQ(p[0].label, 1);
  EXPECT_EQ(p[0].confidence, 1.0);

  const KnnClassifier four(mat({{0}, {1}, {2}, {3}, {50}}), {2, 2, 2, 1, 1}, 4, 3);
  const auto q = four.predict(mat({{0}}));
  EXPECT_EQ(q[0].label, 2);
  EXPECT_EQ(q[0].confidence, 0.75);

  const KnnClassifier tie(mat({{-1}, {1}}), {1, 0}, 2, 2);
  const auto t = tie.predict(mat({{0}}));
  EXPECT_EQ(t[0].label, 0);
  EXPECT_EQ(t[0].confidence, 0.5);

  EXPECT_THROW(KnnClassifier(mat({{0}}), {0}, 2, 1), UsageError);
  EXPECT_THROW(KnnClassifier(mat({{0}}), {0}, 0, 1), ConfigError);
}

struct Trained {
  testing::TinySetup setup;
  GanModel model;
};

const Trained& trained() {
  static const Trained t = [] {
    Trained out{tiny_setup(200), {}};
    const auto& d = out.setup.prepared.data;
    out.model = train_gan(out.setup.init, d.train, d.val_x, d.val_y, d.semantics, d.seen_count, out.setup.tc, 4).model;
    return out;
  }();
  return t;
}

std::vector<int> unseen_of(const SslData& d) {
  return unseen_columns(d.seen_count, static_cast<std::size_t>(d.semantics.rows()));
}

TEST(PseudoLabel, ThresholdExtremes) {
  const auto& t = trained();
  const auto& d = t.setup.prepared.data;
  SslConfig cfg;
  cfg.per_class_synthetic = 20;
  cfg.psi = 1.01;
  EXPECT_EQ(pseudo_label(t.model.generator, d.semantics, unseen_of(d), d.unseen_x, cfg, 5, 1).size(), 0u);
  cfg.psi = 0.0;
  const auto all = pseudo_label(t.model.generator, d.semantics, unseen_of(d), d.unseen_x, cfg, 5, 1);
  EXPECT_EQ(all.size(), static_cast<std::size_t>(d.unseen_x.rows()));
  for (const int y : all.labels) EXPECT_GE(y, static_cast<int>(d.seen_count));
}

TEST(PseudoLabel, ConfidentSubsetIsAtLeastAsAccurate) {
  const auto& t = trained();
  const auto& d = t.setup.prepared.data;
  SslConfig cfg;
  cfg.per_class_synthetic = 20;
  auto accuracy = [&](const PseudoLabelSet& pl) {
    double hits = 0;
    for (std::size_t i = 0; i < pl.size(); ++i) hits += pl.labels[i] == d.unseen_y[pl.source_rows[i]] ? 1 : 0;
    return hits / static_cast<double>(pl.size());
  };
  cfg.psi = 0.0;
  const auto all = pseudo_label(t.model.generator, d.semantics, unseen_of(d), d.unseen_x, cfg, 5, 9);
  cfg.psi = 0.9;
  const auto confident = pseudo_label(t.model.generator, d.semantics, unseen_of(d), d.unseen_x, cfg, 5, 9);
  ASSERT_GT(confident.size(), 0u);
  EXPECT_LE(confident.size(), all.size());
  EXPECT_GE(accuracy(confident), accuracy(all));
  for (const double c : confident.confidences) EXPECT_GE(c, 0.9);
}

TrainingSet small_train() {
  TrainingSet t;
  t.features = mat({{0, 0}, {1, 1}});
  t.labels = {0, 1};
  t.pseudo = {false, false};
  return t;
}

TEST(Augment, EmptySetLeavesDatasetUnchanged) {
  auto t = small_train();
  const auto r = augment_training_set(t, PseudoLabelSet{});
  EXPECT_EQ(r.added, 0u);
  EXPECT_EQ(t.size(), 2u);
}

TEST(Augment, NewClassAndDeduplication) {
  auto t = small_train();
  PseudoLabelSet pl;
  pl.samples = mat({{5, 5}, {6, 6}, {7, 7}});
  pl.labels = {2, 2, 2};
  pl.confidences = {1, 1, 1};
  pl.source_rows = {0, 1, 2};
  const auto r = augment_training_set(t, pl);
  EXPECT_EQ(r.added, 3u);
  EXPECT_EQ(r.new_classes, std::vector<int>{2});
  EXPECT_EQ(t.size(), 5u);
  // The same rows again, now with another label: nothing is re-added.
  pl.labels = {3, 3, 3};
  const auto again = augment_training_set(t, pl);
  EXPECT_EQ(again.added, 0u);
  EXPECT_TRUE(again.new_classes.empty());
  EXPECT_EQ(t.size(), 5u);
  EXPECT_EQ(t.labels.back(), 2);
}

TEST(RegisterClasses, ExistingClassesUntouchedNewSlotsAppended) {
  const auto t = tiny_setup(0);
  GanModel m = t.init;
  const GanModel before = m;
  Rng rng(1);
  register_classes(m, std::vector<int>{0, 3}, rng);
  EXPECT_EQ(m, before);
  register_classes(m, std::vector<int>{6, 5}, rng);
  EXPECT_EQ(m.head_classes, (std::vector<int>{0, 1, 2, 3, 4, 6, 5}));
  const Matrix x = Matrix::Random(7, 8);
  const Matrix old_logits = before.discriminator.forward(x).logits;
  const Matrix new_logits = m.discriminator.forward(x).logits;
  EXPECT_EQ(Matrix(new_logits.leftCols(5)), old_logits);
  const auto ce = cross_entropy(new_logits, std::vector<int>{0, 1, 2, 3, 4, 5, 6});
  EXPECT_TRUE(std::isfinite(ce.value));
}

TEST(RunSsl, UnreachableThresholdEqualsPlainTraining) {
  const auto t = tiny_setup(60);
  const auto& d = t.prepared.data;
  SslConfig cfg;
  cfg.psi = 1.01;
  cfg.per_class_synthetic = 20;
  const std::uint64_t seed = 17;
  const auto init = init_gan(t.gc, t.dc, all_columns(5), derive_seed(seed, 0));
  const auto plain = train_gan(init, d.train, d.val_x, d.val_y, d.semantics, d.seen_count, t.tc, derive_seed(seed, 100));
  for (const std::size_t n : {1u, 3u}) {
    cfg.n_ssl = n;
    const auto r = run_ssl(d, t.gc, t.dc, t.tc, cfg, seed);
    EXPECT_EQ(r.model, plain.model);
    ASSERT_EQ(r.log.size(), plain.log.size());
    for (std::size_t i = 0; i < plain.log.size(); ++i) EXPECT_EQ(r.log[i].second, plain.log[i]);
    EXPECT_EQ(r.reports.size(), 1u);
    EXPECT_EQ(r.final_train.size(), d.train.size());
  }
}

TEST(RunSsl, TrainingSetGrowsMonotonicallyAndIsDeterministic) {
  const auto t = tiny_setup(60);
  const auto& d = t.prepared.data;
  SslConfig cfg;
  cfg.psi = 0.5;
  cfg.n_ssl = 3;
  cfg.per_class_synthetic = 20;
  const auto a = run_ssl(d, t.gc, t.dc, t.tc, cfg, 23);
  std::size_t previous = d.train.size();
  for (const auto& rep : a.reports) {
    EXPECT_GE(rep.train_size, previous);
    previous = rep.train_size;
  }
  // Old rows stay in place.
  EXPECT_EQ(Matrix(a.final_train.features.topRows(d.train.features.rows())), d.train.features);
  const auto b = run_ssl(d, t.gc, t.dc, t.tc, cfg, 23);
  EXPECT_EQ(a.model, b.model);
  EXPECT_EQ(a.reports, b.reports);
}

TEST(RunSsl, ConfigValidation) {
  SslConfig cfg;
  cfg.psi = 1.5;
  EXPECT_THROW(cfg.validate(), ConfigError);
  cfg.psi = 0.5;
  cfg.n_ssl = 0;
  EXPECT_THROW(cfg.validate(), ConfigError);
}

}  // namespace
}  // namespace gancst
