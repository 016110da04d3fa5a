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

#include <algorithm>
#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/nn.hpp"

namespace gancst {

struct KnnPrediction {
  int label = 0;
  double confidence = 0.0;
};

// Brute-force Euclidean k-nearest-neighbour vote. Distance ties are broken
// by reference order; vote ties by the smallest label.
class KnnClassifier {
 public:
  KnnClassifier(Matrix references, std::vector<int> labels, std::size_t k, std::size_t num_classes)
      : references_(std::move(references)), labels_(std::move(labels)), k_(k), num_classes_(num_classes) {
    if (static_cast<std::size_t>(references_.rows()) != labels_.size()) {
      throw UsageError("kNN: reference rows do not match label count");
    }
    if (k_ == 0) throw ConfigError("kNN: K must be positive");
    if (labels_.size() < k_) {
      throw UsageError("kNN: " + std::to_string(labels_.size()) + " references, fewer than K = " +
                       std::to_string(k_));
    }
    for (const int y : labels_) {
      if (y < 0 || static_cast<std::size_t>(y) >= num_classes_) throw UsageError("kNN: label out of range");
    }
  }

  std::size_t k() const { return k_; }
  std::size_t num_classes() const { return num_classes_; }

  // Vote fractions, one row per query and one column per class.
  Matrix predict_proba(const Matrix& queries) const {
    if (queries.cols() != references_.cols()) {
      throw UsageError("kNN: query dimension " + std::to_string(queries.cols()) +
                       " does not match reference dimension " + std::to_string(references_.cols()));
    }
    Matrix votes = Matrix::Zero(queries.rows(), static_cast<Eigen::Index>(num_classes_));
    std::vector<std::pair<double, std::size_t>> dist(labels_.size());
    const double share = 1.0 / static_cast<double>(k_);
    for (Eigen::Index q = 0; q < queries.rows(); ++q) {
      for (std::size_t r = 0; r < labels_.size(); ++r) {
        dist[r] = {(references_.row(static_cast<Eigen::Index>(r)) - queries.row(q)).squaredNorm(), r};
      }
      std::partial_sort(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_), dist.end());
      std::vector<std::size_t> counts(num_classes_, 0);
      for (std::size_t i = 0; i < k_; ++i) ++counts[static_cast<std::size_t>(labels_[dist[i].second])];
      for (std::size_t c = 0; c < num_classes_; ++c) {
        votes(q, static_cast<Eigen::Index>(c)) = static_cast<double>(counts[c]) * share;
      }
    }
    return votes;
  }

  std::vector<KnnPrediction> predict(const Matrix& queries) const {
    const Matrix votes = predict_proba(queries);
    std::vector<KnnPrediction> out(static_cast<std::size_t>(votes.rows()));
    for (Eigen::Index q = 0; q < votes.rows(); ++q) {
      Eigen::Index best = 0;
      for (Eigen::Index c = 1; c < votes.cols(); ++c) {
        if (votes(q, c) > votes(q, best)) best = c;
      }
      out[static_cast<std::size_t>(q)] = {static_cast<int>(best), votes(q, best)};
    }
    return out;
  }

 private:
  Matrix references_;
  std::vector<int> labels_;
  std::size_t k_;
  std::size_t num_classes_;
};

}  // namespace gancst
