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

// Zero-shot dataset assembly and the synthetic desk-scale generator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/io.hpp"
#include "gancst/nn.hpp"
#include "gancst/rng.hpp"

namespace gancst {

// Labels everywhere are dataset class ids.
struct ZslDataset {
  LabeledMatrix train;      // seen-class samples only
  LabeledMatrix test;       // seen and unseen samples
  LabeledMatrix semantics;  // one row per class, label = class id
  SplitSpec split;

  std::vector<int> class_ids() const { return semantics.labels; }

  // Columns used by the model: seen ids ascending, then unseen ids ascending.
  std::vector<int> column_order() const {
    std::vector<int> order = split.seen;
    order.insert(order.end(), split.unseen.begin(), split.unseen.end());
    return order;
  }

  void validate() const {
    const auto ids = class_ids();
    std::set<int> unique(ids.begin(), ids.end());
    if (unique.size() != ids.size()) throw ValidationError("semantic file lists a class twice");
    validate_split(split, ids);
    const std::set<int> unseen(split.unseen.begin(), split.unseen.end());
    for (const int y : train.labels) {
      if (!unique.contains(y)) throw ValidationError("training label " + std::to_string(y) + " has no semantic vector");
      if (unseen.contains(y)) {
        throw ValidationError("unseen class " + std::to_string(y) + " has samples in the training partition");
      }
    }
    for (const int y : test.labels) {
      if (!unique.contains(y)) throw ValidationError("test label " + std::to_string(y) + " has no semantic vector");
    }
    if (train.rows() > 0 && test.rows() > 0 && train.x.cols() != test.x.cols()) {
      throw ValidationError("train and test features have different dimensions");
    }
    if (!train.x.allFinite() || !test.x.allFinite() || !semantics.x.allFinite()) {
      throw ValidationError("dataset contains non-finite values");
    }
  }
};

// Semantic matrix reordered to the column order.
inline Matrix semantics_by_column(const ZslDataset& ds) {
  std::map<int, Eigen::Index> row_of;
  for (std::size_t i = 0; i < ds.semantics.labels.size(); ++i) {
    row_of[ds.semantics.labels[i]] = static_cast<Eigen::Index>(i);
  }
  const auto order = ds.column_order();
  Matrix out(static_cast<Eigen::Index>(order.size()), ds.semantics.x.cols());
  for (std::size_t c = 0; c < order.size(); ++c) out.row(static_cast<Eigen::Index>(c)) = ds.semantics.x.row(row_of.at(order[c]));
  return out;
}

inline std::map<int, int> column_of(const std::vector<int>& order) {
  std::map<int, int> m;
  for (std::size_t i = 0; i < order.size(); ++i) m[order[i]] = static_cast<int>(i);
  return m;
}

inline ZslDataset load_dataset(const std::string& train_path, const std::string& test_path,
                               const std::string& semantics_path, const std::string& split_path) {
  ZslDataset ds;
  ds.train = load_features(train_path);
  ds.test = load_features(test_path);
  ds.semantics = load_matrix(semantics_path);
  ds.split = load_split(split_path);
  ds.validate();
  return ds;
}

inline void save_dataset(const ZslDataset& ds, const std::string& train_path, const std::string& test_path,
                         const std::string& semantics_path, const std::string& split_path, bool binary = false) {
  save_matrix(train_path, ds.train, binary);
  save_matrix(test_path, ds.test, binary);
  save_matrix(semantics_path, ds.semantics, binary);
  save_split(split_path, ds.split);
}

struct SyntheticSpec {
  std::size_t num_seen = 10;
  std::size_t num_unseen = 5;
  std::size_t samples_per_class = 50;
  double seen_test_fraction = 0.2;
  Eigen::Index semantic_dim = 50;
  Eigen::Index visual_dim = 64;
  double sigma = 0.1;
  double density = 0.2;
  std::uint64_t seed = 7;

  void validate() const {
    if (num_seen < 1 || num_unseen < 1 || samples_per_class < 1 || semantic_dim < 1 || visual_dim < 1) {
      throw ConfigError("synthetic spec counts must all be >= 1");
    }
    if (sigma < 0.0) throw ConfigError("synthetic sigma must be non-negative");
    if (!(density > 0.0 && density <= 1.0)) throw ConfigError("synthetic density must lie in (0, 1]");
    if (seen_test_fraction < 0.0 || seen_test_fraction >= 1.0) {
      throw ConfigError("seen_test_fraction must lie in [0, 1)");
    }
  }
};

struct SyntheticData {
  ZslDataset dataset;
  Matrix w_star;   // visual_dim x semantic_dim
  Matrix centers;  // row per class id
};

// Class ids 0..num_seen-1 are seen, the rest unseen. Semantic vectors are
// sparse, non-negative and L2-normalized; class centers are
// tanh(W* s_c); samples are centers plus N(0, sigma^2) noise. Each seen
// class keeps round(seen_test_fraction * samples) samples for testing;
// unseen samples are all test samples.
inline SyntheticData make_synthetic(const SyntheticSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const std::size_t n = spec.num_seen + spec.num_unseen;
  const auto nnz = static_cast<std::size_t>(
      std::max<long long>(1, std::llround(spec.density * static_cast<double>(spec.semantic_dim))));

  SyntheticData out;
  auto& ds = out.dataset;
  ds.semantics.x = Matrix::Zero(static_cast<Eigen::Index>(n), spec.semantic_dim);
  for (std::size_t c = 0; c < n; ++c) {
    const auto r = static_cast<Eigen::Index>(c);
    for (const auto j : rng.sample(static_cast<std::size_t>(spec.semantic_dim), nnz)) {
      ds.semantics.x(r, static_cast<Eigen::Index>(j)) = rng.uniform();
    }
    double norm = ds.semantics.x.row(r).norm();
    if (norm == 0.0) {
      ds.semantics.x(r, 0) = 1.0;
      norm = 1.0;
    }
    ds.semantics.x.row(r) /= norm;
    ds.semantics.labels.push_back(static_cast<int>(c));
  }

  out.w_star.resize(spec.visual_dim, spec.semantic_dim);
  for (Eigen::Index i = 0; i < out.w_star.size(); ++i) out.w_star.data()[i] = rng.normal();
  out.centers = (ds.semantics.x * out.w_star.transpose()).array().tanh().matrix();

  const auto test_seen = static_cast<std::size_t>(
      std::llround(spec.seen_test_fraction * static_cast<double>(spec.samples_per_class)));
  std::vector<Eigen::RowVectorXd> train_rows, test_rows;
  for (std::size_t c = 0; c < n; ++c) {
    const bool seen = c < spec.num_seen;
    for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
      Eigen::RowVectorXd x = out.centers.row(static_cast<Eigen::Index>(c));
      for (Eigen::Index d = 0; d < x.size(); ++d) x[d] += spec.sigma * rng.normal();
      const bool to_test = !seen || s >= spec.samples_per_class - test_seen;
      (to_test ? test_rows : train_rows).push_back(std::move(x));
      (to_test ? ds.test.labels : ds.train.labels).push_back(static_cast<int>(c));
    }
  }
  auto stack = [&](const std::vector<Eigen::RowVectorXd>& rows) {
    Matrix m(static_cast<Eigen::Index>(rows.size()), spec.visual_dim);
    for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = rows[i];
    return m;
  };
  ds.train.x = stack(train_rows);
  ds.test.x = stack(test_rows);
  for (std::size_t c = 0; c < n; ++c) {
    (c < spec.num_seen ? ds.split.seen : ds.split.unseen).push_back(static_cast<int>(c));
  }
  return out;
}

}  // namespace gancst
