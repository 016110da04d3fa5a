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

// Class knowledge overlay: embed class names, score pairwise class
// similarity, then append the articles of each class's top-k most similar
// classes to its own article.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/nn.hpp"

namespace gancst {

class EmbeddingTable {
 public:
  EmbeddingTable() = default;

  void add(const std::string& word, Vector v) {
    if (dim_ == 0) {
      if (v.size() == 0) throw ConfigError("embedding vectors must be non-empty");
      dim_ = v.size();
    }
    if (v.size() != dim_) {
      throw ConfigError("embedding for '" + word + "' has dimension " + std::to_string(v.size()) +
                        ", table dimension is " + std::to_string(dim_));
    }
    if (!v.allFinite()) throw ConfigError("embedding for '" + word + "' is not finite");
    vectors_[word] = std::move(v);
  }

  const Vector* find(const std::string& word) const {
    const auto it = vectors_.find(word);
    return it == vectors_.end() ? nullptr : &it->second;
  }

  Eigen::Index dim() const { return dim_; }
  std::size_t size() const { return vectors_.size(); }
  bool empty() const { return vectors_.empty(); }

  // `word v1 ... vd` per line. A leading `<count> <dim>` header line, as
  // written by word2vec, is skipped. Words are lowercased on load.
  static EmbeddingTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open embedding table '" + path + "'");
    EmbeddingTable table;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream fields(line);
      std::string word;
      if (!(fields >> word)) continue;
      std::vector<double> values;
      std::string tok;
      while (fields >> tok) {
        try {
          std::size_t used = 0;
          values.push_back(std::stod(tok, &used));
          if (used != tok.size()) throw std::invalid_argument(tok);
        } catch (const std::exception&) {
          throw ParseError("embedding table: bad number '" + tok + "'", line_no);
        }
      }
      if (line_no == 1 && values.size() == 1 &&
          std::all_of(word.begin(), word.end(), [](char c) { return std::isdigit(static_cast<unsigned char>(c)); })) {
        continue;
      }
      if (values.empty()) throw ParseError("embedding table: word without vector", line_no);
      for (auto& c : word) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
      try {
        table.add(word, Eigen::Map<const Vector>(values.data(), static_cast<Eigen::Index>(values.size())));
      } catch (const ConfigError& e) {
        throw ParseError(std::string("embedding table: ") + e.what(), line_no);
      }
    }
    return table;
  }

 private:
  std::unordered_map<std::string, Vector> vectors_;
  Eigen::Index dim_ = 0;
};

// Lowercase and split on whitespace, hyphens and underscores.
inline std::vector<std::string> class_name_tokens(std::string_view name) {
  std::vector<std::string> out;
  std::string current;
  for (const char ch : name) {
    const auto c = static_cast<unsigned char>(ch);
    if (std::isspace(c) || ch == '-' || ch == '_') {
      if (!current.empty()) out.push_back(std::move(current));
      current.clear();
    } else {
      current.push_back(static_cast<char>(std::tolower(c)));
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

// Mean of the embeddings of the name's known tokens.
inline Vector embed_class_name(const EmbeddingTable& table, std::string_view name) {
  if (table.empty()) throw ConfigError("embedding table is empty");
  Vector sum = Vector::Zero(table.dim());
  std::size_t found = 0;
  for (const auto& token : class_name_tokens(name)) {
    if (const Vector* v = table.find(token)) {
      sum += *v;
      ++found;
    }
  }
  if (found == 0) throw MissingEmbeddingError(std::string(name));
  return sum / static_cast<double>(found);
}

enum class SimilarityKind { kCosine, kNegEuclidean };

inline SimilarityKind similarity_from_string(const std::string& s) {
  if (s == "cosine") return SimilarityKind::kCosine;
  if (s == "neg_euclidean") return SimilarityKind::kNegEuclidean;
  throw ConfigError("unknown similarity '" + s + "' (expected cosine or neg_euclidean)");
}

inline double cosine_similarity(const Vector& a, const Vector& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return 0.0;
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

// SM[i][j] between embedded names i and j. The cosine diagonal is set to
// exactly 1 and the matrix is filled symmetrically.
inline Matrix similarity_matrix(const EmbeddingTable& table, const std::vector<std::string>& names,
                                SimilarityKind kind = SimilarityKind::kCosine) {
  std::vector<Vector> embedded;
  embedded.reserve(names.size());
  for (const auto& n : names) embedded.push_back(embed_class_name(table, n));
  const auto n = static_cast<Eigen::Index>(names.size());
  Matrix sm(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = i; j < n; ++j) {
      const auto& a = embedded[static_cast<std::size_t>(i)];
      const auto& b = embedded[static_cast<std::size_t>(j)];
      double s = 0.0;
      if (kind == SimilarityKind::kCosine) {
        s = i == j ? 1.0 : cosine_similarity(a, b);
      } else {
        s = i == j ? 0.0 : -(a - b).norm();
      }
      sm(i, j) = s;
      sm(j, i) = s;
    }
  }
  return sm;
}

struct ClassRecord {
  int class_id = 0;
  std::string name;
  std::string article_original;
  std::string article_overlay;
};

// Indices of the k most similar other classes for row i, descending by
// similarity, ties broken by ascending class id.
inline std::vector<std::size_t> top_k_neighbors(const Matrix& sm, std::size_t row, std::size_t k,
                                                std::span<const int> class_ids) {
  const auto n = static_cast<std::size_t>(sm.rows());
  std::vector<std::size_t> order;
  order.reserve(n - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (j != row) order.push_back(j);
  }
  const auto r = static_cast<Eigen::Index>(row);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    const double sa = sm(r, static_cast<Eigen::Index>(a));
    const double sb = sm(r, static_cast<Eigen::Index>(b));
    if (sa != sb) return sa > sb;
    return class_ids[a] < class_ids[b];
  });
  order.resize(std::min(k, order.size()));
  return order;
}

inline std::vector<ClassRecord> overlay(std::vector<ClassRecord> records, const Matrix& sm,
                                        std::size_t k) {
  const std::size_t n = records.size();
  if (sm.rows() != static_cast<Eigen::Index>(n) || sm.cols() != static_cast<Eigen::Index>(n)) {
    throw ConfigError("similarity matrix is not " + std::to_string(n) + "x" + std::to_string(n));
  }
  if (k >= n && !(n == 0 && k == 0)) {
    throw ConfigError("overlay k = " + std::to_string(k) + " must be smaller than the class count " +
                      std::to_string(n));
  }
  std::vector<int> ids(n);
  for (std::size_t i = 0; i < n; ++i) ids[i] = records[i].class_id;
  for (std::size_t i = 0; i < n; ++i) {
    std::string text = records[i].article_original;
    for (const std::size_t j : top_k_neighbors(sm, i, k, ids)) {
      text.push_back('\n');
      text += records[j].article_original;
    }
    records[i].article_overlay = std::move(text);
  }
  return records;
}

}  // namespace gancst
