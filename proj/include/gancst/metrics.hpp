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

// Evaluation math for zero-shot and generalized zero-shot classification.
//
// Score matrices have one row per sample and one column per class, with
// the seen-class block first (columns [0, seen_count)) and the unseen
// block after it. Labels are column indices. Argmax ties go to the
// smallest column. Accuracies are per-class means unless noted.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <numeric>
#include <span>
#include <utility>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/nn.hpp"

namespace gancst {

struct CalibrationSweep {
  double lambda_min = -2.0;
  double lambda_max = 2.0;
  double delta = 0.01;

  void validate() const {
    if (!(delta > 0.0)) throw ConfigError("calibration step must be positive");
    if (!(lambda_min < lambda_max)) throw ConfigError("calibration sweep needs lambda_min < lambda_max");
  }

  // m = (J - lambda_min) / delta, rounded to the nearest integer.
  std::size_t count() const {
    validate();
    return static_cast<std::size_t>(std::llround((lambda_max - lambda_min) / delta));
  }

  // Computed by multiplication so no error accumulates along the sweep.
  double value(std::size_t j) const { return lambda_min + static_cast<double>(j) * delta; }
};

// Column of the calibrated maximum. `lambda` is added to every column at or
// beyond `seen_count`.
inline int calibrated_argmax(const Matrix& scores, Eigen::Index row, std::size_t seen_count,
                             double lambda) {
  int best = 0;
  double best_score = -std::numeric_limits<double>::infinity();
  for (Eigen::Index c = 0; c < scores.cols(); ++c) {
    const double s = scores(row, c) + (static_cast<std::size_t>(c) >= seen_count ? lambda : 0.0);
    if (s > best_score) {
      best_score = s;
      best = static_cast<int>(c);
    }
  }
  return best;
}

// Argmax restricted to the given candidate columns (ascending order assumed).
inline int restricted_argmax(const Matrix& scores, Eigen::Index row, std::span<const int> candidates) {
  int best = candidates.front();
  double best_score = -std::numeric_limits<double>::infinity();
  for (const int c : candidates) {
    const double s = scores(row, c);
    if (s > best_score) {
      best_score = s;
      best = c;
    }
  }
  return best;
}

// Mean over the distinct labels of the per-class fraction of correct
// predictions, times 100.
inline double per_class_accuracy(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.empty()) throw ConfigError("accuracy over an empty sample set");
  std::map<int, std::pair<std::size_t, std::size_t>> per_class;  // correct, total
  for (std::size_t i = 0; i < labels.size(); ++i) {
    auto& [correct, total] = per_class[labels[i]];
    ++total;
    if (predictions[i] == labels[i]) ++correct;
  }
  double sum = 0.0;
  for (const auto& [label, counts] : per_class) {
    sum += static_cast<double>(counts.first) / static_cast<double>(counts.second);
  }
  return 100.0 * sum / static_cast<double>(per_class.size());
}

// Per-class top-1 with the argmax restricted to `candidates`. Every label
// must be one of the candidates.
inline double top1_per_class(const Matrix& scores, std::span<const int> labels,
                             std::span<const int> candidates) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) {
    throw UsageError("score rows do not match label count");
  }
  if (candidates.empty()) throw ConfigError("top-1 over an empty class set");
  std::vector<int> sorted(candidates.begin(), candidates.end());
  std::sort(sorted.begin(), sorted.end());
  for (const int c : sorted) {
    if (c < 0 || c >= scores.cols()) throw UsageError("candidate column out of range");
  }
  std::vector<int> predictions(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::binary_search(sorted.begin(), sorted.end(), labels[i])) {
      throw ConfigError("label " + std::to_string(labels[i]) + " is not in the evaluated class set");
    }
    predictions[i] = restricted_argmax(scores, static_cast<Eigen::Index>(i), sorted);
  }
  return per_class_accuracy(labels, predictions);
}

// All columns are candidates.
inline double top1_per_class(const Matrix& scores, std::span<const int> labels) {
  std::vector<int> all(static_cast<std::size_t>(scores.cols()));
  std::iota(all.begin(), all.end(), 0);
  return top1_per_class(scores, labels, all);
}

// Calibrated-stacking generalized accuracy: for each lambda of the sweep,
// the per-sample accuracy of the argmax after adding lambda to the unseen
// block; averaged over the sweep, times 100.
inline double generalized_accuracy(const Matrix& scores, std::span<const int> labels,
                                   std::size_t seen_count, const CalibrationSweep& sweep = {}) {
  if (seen_count >= static_cast<std::size_t>(scores.cols())) {
    throw ConfigError("generalized accuracy needs at least one unseen column");
  }
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) {
    throw UsageError("score rows do not match label count");
  }
  if (labels.empty()) throw ConfigError("generalized accuracy over an empty sample set");
  const std::size_t m = sweep.count();
  double total = 0.0;
  for (std::size_t j = 0; j < m; ++j) {
    const double lambda = sweep.value(j);
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (calibrated_argmax(scores, static_cast<Eigen::Index>(i), seen_count, lambda) == labels[i]) {
        ++correct;
      }
    }
    total += static_cast<double>(correct) / static_cast<double>(labels.size());
  }
  return 100.0 * total / static_cast<double>(m);
}

struct SucPoint {
  double unseen = 0.0;  // fraction in [0, 1]
  double seen = 0.0;

  friend bool operator==(const SucPoint&, const SucPoint&) = default;
};

inline void sort_and_dedup(std::vector<SucPoint>& points) {
  std::sort(points.begin(), points.end(), [](const SucPoint& a, const SucPoint& b) {
    if (a.unseen != b.unseen) return a.unseen < b.unseen;
    return a.seen > b.seen;
  });
  points.erase(std::unique(points.begin(), points.end()), points.end());
}

// One (unseen accuracy, seen accuracy) point per lambda of the sweep, both
// per-class top-1 over the full class set.
inline std::vector<SucPoint> suc_curve(const Matrix& scores, std::span<const int> labels,
                                       std::size_t seen_count, const CalibrationSweep& sweep = {}) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) {
    throw UsageError("score rows do not match label count");
  }
  std::vector<std::size_t> seen_rows;
  std::vector<std::size_t> unseen_rows;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (static_cast<std::size_t>(labels[i]) < seen_count ? seen_rows : unseen_rows).push_back(i);
  }
  if (seen_rows.empty() || unseen_rows.empty()) {
    throw ConfigError("SUC needs both seen and unseen test samples");
  }
  auto accuracy = [&](const std::vector<std::size_t>& rows, double lambda) {
    std::vector<int> y;
    std::vector<int> pred;
    for (const auto r : rows) {
      y.push_back(labels[r]);
      pred.push_back(calibrated_argmax(scores, static_cast<Eigen::Index>(r), seen_count, lambda));
    }
    return per_class_accuracy(y, pred) / 100.0;
  };
  std::vector<SucPoint> points;
  const std::size_t m = sweep.count();
  for (std::size_t j = 0; j < m; ++j) {
    const double lambda = sweep.value(j);
    points.push_back({accuracy(unseen_rows, lambda), accuracy(seen_rows, lambda)});
  }
  sort_and_dedup(points);
  return points;
}

// Trapezoidal area under the seen-vs-unseen curve; points are sorted first.
inline double ausuc(std::vector<SucPoint> points) {
  if (points.size() < 2) throw UsageError("AUSUC needs at least two points");
  std::sort(points.begin(), points.end(), [](const SucPoint& a, const SucPoint& b) {
    if (a.unseen != b.unseen) return a.unseen < b.unseen;
    return a.seen > b.seen;
  });
  double area = 0.0;
  for (std::size_t i = 1; i < points.size(); ++i) {
    area += (points[i].unseen - points[i - 1].unseen) * (points[i].seen + points[i - 1].seen) / 2.0;
  }
  return area;
}

inline double harmonic_mean(double s, double u) {
  if (s + u <= 0.0) return 0.0;
  return 2.0 * s * u / (s + u);
}

struct GzslResult {
  double seen = 0.0;
  double unseen = 0.0;
  double harmonic = 0.0;
};

// Uncalibrated argmax over every class.
inline GzslResult gzsl_suh(const Matrix& scores, std::span<const int> labels, std::size_t seen_count) {
  if (static_cast<std::size_t>(scores.rows()) != labels.size()) {
    throw UsageError("score rows do not match label count");
  }
  std::vector<int> ys, ps, yu, pu;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int pred = calibrated_argmax(scores, static_cast<Eigen::Index>(i), seen_count, 0.0);
    if (static_cast<std::size_t>(labels[i]) < seen_count) {
      ys.push_back(labels[i]);
      ps.push_back(pred);
    } else {
      yu.push_back(labels[i]);
      pu.push_back(pred);
    }
  }
  if (ys.empty() || yu.empty()) throw ConfigError("GZSL needs both seen and unseen test samples");
  GzslResult r;
  r.seen = per_class_accuracy(ys, ps);
  r.unseen = per_class_accuracy(yu, pu);
  r.harmonic = harmonic_mean(r.seen, r.unseen);
  return r;
}

// Number of items retrieved for a class with n images at the given ratio.
inline std::size_t retrieval_count(double ratio, std::size_t n) {
  const double raw = ratio * static_cast<double>(n);
  const auto k = static_cast<std::size_t>(std::ceil(raw - 1e-9));
  return std::clamp<std::size_t>(k, 1, n);
}

// Zero-shot retrieval: for each class (row of `queries`, label = row index)
// rank every image by Euclidean distance to the query, keep the top
// ceil(ratio * n_c), and score the fraction that belong to the class.
// Returns the mean precision over classes, times 100.
inline double retrieval_map(const Matrix& queries, const Matrix& images, std::span<const int> labels,
                            double ratio) {
  if (images.rows() != static_cast<Eigen::Index>(labels.size())) {
    throw UsageError("image rows do not match label count");
  }
  if (queries.cols() != images.cols()) throw UsageError("query and image dimensions differ");
  if (!(ratio > 0.0 && ratio <= 1.0)) throw ConfigError("retrieval ratio must lie in (0, 1]");
  const auto n_classes = static_cast<std::size_t>(queries.rows());
  std::vector<std::size_t> counts(n_classes, 0);
  for (const int y : labels) {
    if (y < 0 || static_cast<std::size_t>(y) >= n_classes) throw UsageError("image label out of range");
    ++counts[static_cast<std::size_t>(y)];
  }
  double sum = 0.0;
  std::vector<std::pair<double, std::size_t>> ranked(labels.size());
  for (std::size_t c = 0; c < n_classes; ++c) {
    if (counts[c] == 0) throw ConfigError("class " + std::to_string(c) + " has no images to retrieve");
    for (std::size_t i = 0; i < labels.size(); ++i) {
      const auto r = static_cast<Eigen::Index>(i);
      ranked[i] = {(images.row(r) - queries.row(static_cast<Eigen::Index>(c))).squaredNorm(), i};
    }
    const std::size_t k = retrieval_count(ratio, counts[c]);
    std::partial_sort(ranked.begin(), ranked.begin() + static_cast<std::ptrdiff_t>(k), ranked.end());
    std::size_t hits = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (labels[ranked[i].second] == static_cast<int>(c)) ++hits;
    }
    sum += static_cast<double>(hits) / static_cast<double>(k);
  }
  return 100.0 * sum / static_cast<double>(n_classes);
}

struct EvalReport {
  double top1_unseen = 0.0;
  double seen = 0.0;
  double unseen = 0.0;
  double harmonic = 0.0;
  double g_acc = 0.0;
  std::vector<SucPoint> suc_points;
  double ausuc = 0.0;
  std::vector<std::pair<int, double>> map_at;  // percent retrieved -> mAP
};

}  // namespace gancst
