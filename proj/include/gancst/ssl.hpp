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

#pragma once

// Semi-supervised retraining: pseudo-label unseen-class samples with a kNN
// fitted on generated features, fold confident ones into the training set,
// grow the classifier head for newly introduced classes, retrain.

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <functional>
#include <set>
#include <string>
#include <unordered_set>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/gan.hpp"
#include "gancst/knn.hpp"
#include "gancst/metrics.hpp"

namespace gancst {

struct SslConfig {
  double psi = 0.5;
  std::size_t n_ssl = 1;
  std::size_t per_class_synthetic = 60;

  void validate() const {
    if (psi < 0.0 || psi > 1.01) throw ConfigError("psi must lie in [0, 1] (1.01 disables pseudo-labeling)");
    if (n_ssl < 1) throw ConfigError("n_ssl must be >= 1");
    if (per_class_synthetic < 1) throw ConfigError("per_class_synthetic must be >= 1");
  }
};

struct PseudoLabelSet {
  Matrix samples;
  std::vector<int> labels;  // global class columns, all unseen
  std::vector<double> confidences;
  std::vector<std::size_t> source_rows;  // rows of the unseen pool

  std::size_t size() const { return labels.size(); }
};

// Fits a kNN on `per_class_synthetic` generated features per unseen class,
// predicts every unseen sample, keeps those with confidence >= psi.
inline PseudoLabelSet pseudo_label(const Generator& g, const Matrix& semantics, std::span<const int> unseen_classes,
                                   const Matrix& unseen_x, const SslConfig& cfg, std::size_t knn_k,
                                   std::uint64_t seed) {
  PseudoLabelSet out;
  out.samples.resize(0, unseen_x.cols());
  if (unseen_classes.empty() || unseen_x.rows() == 0) return out;
  Rng rng(seed);
  std::vector<int> ref_labels;
  const Matrix refs = generate_for_classes(g, semantics, unseen_classes, cfg.per_class_synthetic, rng, &ref_labels);
  std::vector<int> local(ref_labels.size());
  for (std::size_t i = 0; i < ref_labels.size(); ++i) {
    local[i] = static_cast<int>(std::find(unseen_classes.begin(), unseen_classes.end(), ref_labels[i]) -
                                unseen_classes.begin());
  }
  const KnnClassifier knn(refs, std::move(local), std::min(knn_k, static_cast<std::size_t>(refs.rows())),
                          unseen_classes.size());
  const auto predictions = knn.predict(unseen_x);
  std::vector<std::size_t> keep;
  for (std::size_t i = 0; i < predictions.size(); ++i) {
    if (predictions[i].confidence >= cfg.psi) {
      keep.push_back(i);
      out.labels.push_back(unseen_classes[static_cast<std::size_t>(predictions[i].label)]);
      out.confidences.push_back(predictions[i].confidence);
    }
  }
  out.samples = gather_rows(unseen_x, keep);
  out.source_rows = std::move(keep);
  return out;
}

struct AugmentResult {
  std::size_t added = 0;
  std::vector<int> new_classes;  // ascending
};

namespace detail {
inline std::string row_key(const Matrix& m, Eigen::Index r) {
  std::string key(static_cast<std::size_t>(m.cols()) * sizeof(double), '\0');
  std::memcpy(key.data(), m.row(r).data(), key.size());
  return key;
}
}  // namespace detail

// Appends pseudo-labeled rows not already present among earlier
// pseudo-labeled rows. A row keeps the label it was first added with.
inline AugmentResult augment_training_set(TrainingSet& train, const PseudoLabelSet& pl) {
  AugmentResult result;
  if (pl.size() == 0) return result;
  if (pl.samples.cols() != train.features.cols()) throw UsageError("pseudo-labeled feature dimension mismatch");
  std::unordered_set<std::string> present;
  const std::set<int> known(train.labels.begin(), train.labels.end());
  for (std::size_t i = 0; i < train.size(); ++i) {
    if (train.pseudo[i]) present.insert(detail::row_key(train.features, static_cast<Eigen::Index>(i)));
  }
  std::vector<std::size_t> fresh;
  for (std::size_t i = 0; i < pl.size(); ++i) {
    if (present.insert(detail::row_key(pl.samples, static_cast<Eigen::Index>(i))).second) fresh.push_back(i);
  }
  if (fresh.empty()) return result;
  const auto old_rows = train.features.rows();
  Matrix grown(old_rows + static_cast<Eigen::Index>(fresh.size()), train.features.cols());
  grown.topRows(old_rows) = train.features;
  std::set<int> introduced;
  for (std::size_t k = 0; k < fresh.size(); ++k) {
    const auto i = fresh[k];
    grown.row(old_rows + static_cast<Eigen::Index>(k)) = pl.samples.row(static_cast<Eigen::Index>(i));
    train.labels.push_back(pl.labels[i]);
    train.pseudo.push_back(true);
    if (!known.contains(pl.labels[i])) introduced.insert(pl.labels[i]);
  }
  train.features = std::move(grown);
  result.added = fresh.size();
  result.new_classes.assign(introduced.begin(), introduced.end());
  return result;
}

// Registers new classes on the discriminator head (appended slots).
inline void register_classes(GanModel& model, std::span<const int> classes, Rng& rng) {
  std::vector<int> missing;
  for (const int c : classes) {
    if (std::find(model.head_classes.begin(), model.head_classes.end(), c) == model.head_classes.end()) {
      missing.push_back(c);
    }
  }
  if (missing.empty()) return;
  expand_classifier_head(model.discriminator,
                         static_cast<Eigen::Index>(model.head_classes.size() + missing.size()), rng);
  model.head_classes.insert(model.head_classes.end(), missing.begin(), missing.end());
}

// Inputs shared by every SSL iteration. Columns of `semantics` are global
// classes: [0, seen_count) seen, the rest unseen.
struct SslData {
  TrainingSet train;
  Matrix val_x;
  std::vector<int> val_y;
  Matrix semantics;
  std::size_t seen_count = 0;
  Matrix unseen_x;
  std::vector<int> unseen_y;  // used for reporting only
};

struct SslIterationReport {
  std::size_t iteration = 0;
  std::size_t retained = 0;
  std::size_t added = 0;
  std::size_t new_classes = 0;
  std::size_t train_size = 0;
  double unseen_top1 = 0.0;
  double gacc = 0.0;

  friend bool operator==(const SslIterationReport&, const SslIterationReport&) = default;
};

struct SslResult {
  GanModel model;
  std::vector<SslIterationReport> reports;
  std::vector<std::pair<std::size_t, TrainLogEntry>> log;  // (iteration, entry)
  TrainingSet final_train;
};

inline std::vector<int> unseen_columns(std::size_t seen_count, std::size_t total) {
  std::vector<int> v;
  for (std::size_t c = seen_count; c < total; ++c) v.push_back(static_cast<int>(c));
  return v;
}

// Per-class top-1 over unseen samples with a kNN fitted on generated
// features of the unseen classes only.
inline double unseen_top1(const Generator& g, const Matrix& semantics, std::size_t seen_count,
                          const Matrix& unseen_x, std::span<const int> unseen_y, std::size_t per_class,
                          std::size_t k, std::uint64_t seed) {
  const auto classes = unseen_columns(seen_count, static_cast<std::size_t>(semantics.rows()));
  Rng rng(seed);
  const Matrix scores = knn_scores(g, semantics, classes, per_class, k, unseen_x, rng);
  std::vector<int> local(unseen_y.size());
  for (std::size_t i = 0; i < unseen_y.size(); ++i) local[i] = unseen_y[i] - static_cast<int>(seen_count);
  return top1_per_class(scores, local);
}

// Seeds: model init uses derive_seed(seed, 0); iteration i trains with
// derive_seed(seed, 100 + i). A single-iteration run therefore trains
// exactly like a plain GAN run. The loop ends early once an iteration adds
// no new samples, since the next one would retrain on the same data.
inline SslResult run_ssl(SslData data, const GeneratorConfig& gc, const DiscriminatorConfig& dc,
                         const GanTrainConfig& gan_cfg, const SslConfig& ssl_cfg, std::uint64_t seed,
                         const std::function<void(std::size_t, const TrainLogEntry&)>& on_eval = {}) {
  ssl_cfg.validate();
  gan_cfg.validate();
  const auto total = static_cast<std::size_t>(data.semantics.rows());
  if (data.seen_count == 0 || data.seen_count >= total) throw ConfigError("need both seen and unseen classes");
  std::set<int> initial(data.train.labels.begin(), data.train.labels.end());
  SslResult result;
  result.model = init_gan(gc, dc, std::vector<int>(initial.begin(), initial.end()), derive_seed(seed, 0));
  const auto unseen = unseen_columns(data.seen_count, total);
  for (std::size_t it = 0; it < ssl_cfg.n_ssl; ++it) {
    auto trained = train_gan(result.model, data.train, data.val_x, data.val_y, data.semantics, data.seen_count,
                             gan_cfg, derive_seed(seed, 100 + it),
                             [&](const TrainLogEntry& e) { if (on_eval) on_eval(it, e); });
    result.model = std::move(trained.model);
    for (const auto& e : trained.log) result.log.emplace_back(it, e);

    SslIterationReport report;
    report.iteration = it;
    report.gacc = std::max(trained.best_gacc, 0.0);
    if (!data.unseen_y.empty()) {
      report.unseen_top1 = unseen_top1(result.model.generator, data.semantics, data.seen_count, data.unseen_x,
                                       data.unseen_y, ssl_cfg.per_class_synthetic, gan_cfg.knn_k,
                                       derive_seed(seed, 400 + it));
    }
    const auto pl = pseudo_label(result.model.generator, data.semantics, unseen, data.unseen_x, ssl_cfg,
                                 gan_cfg.knn_k, derive_seed(seed, 200 + it));
    report.retained = pl.size();
    const bool last = it + 1 == ssl_cfg.n_ssl;
    if (!last) {
      const auto aug = augment_training_set(data.train, pl);
      report.added = aug.added;
      report.new_classes = aug.new_classes.size();
      Rng head_rng(derive_seed(seed, 300 + it));
      register_classes(result.model, aug.new_classes, head_rng);
    }
    report.train_size = data.train.size();
    result.reports.push_back(report);
    if (!last && report.added == 0) break;
  }
  result.final_train = std::move(data.train);
  return result;
}

}  // namespace gancst
