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

// Article preprocessing (tokenize, drop stop words, stem) and a smoothed
// TF-IDF encoder producing L2-normalized class semantic vectors.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/nn.hpp"
#include "gancst/porter.hpp"

namespace gancst {

using TokenSequence = std::vector<std::string>;
using StopWords = std::unordered_set<std::string>;

// Splits on every non-alphabetic byte and lowercases. Digits and non-ASCII
// bytes act as separators.
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> out;
  std::string current;
  for (const char ch : text) {
    const auto c = static_cast<unsigned char>(ch);
    if (c < 128 && std::isalpha(c)) {
      current.push_back(static_cast<char>(std::tolower(c)));
    } else if (!current.empty()) {
      out.push_back(std::move(current));
      current.clear();
    }
  }
  if (!current.empty()) out.push_back(std::move(current));
  return out;
}

inline TokenSequence preprocess(std::string_view raw_text, const StopWords& stopwords) {
  TokenSequence out;
  for (auto& token : tokenize(raw_text)) {
    if (stopwords.contains(token)) continue;
    std::string stemmed = porter::stem(std::move(token));
    if (stemmed.empty() || stopwords.contains(stemmed)) continue;
    out.push_back(std::move(stemmed));
  }
  return out;
}

// One word per line; blank lines and lines starting with '#' are skipped.
inline StopWords load_stopwords(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open stop-word file '" + path + "'");
  StopWords words;
  std::string line;
  while (std::getline(in, line)) {
    std::string word;
    for (const char ch : line) {
      if (!std::isspace(static_cast<unsigned char>(ch))) {
        word.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(ch))));
      }
    }
    if (word.empty() || word.front() == '#') continue;
    words.insert(std::move(word));
  }
  return words;
}

class TfIdfModel {
 public:
  TfIdfModel() = default;

  // idf(t) = ln((1 + N) / (1 + df(t))) + 1; vocabulary sorted lexicographically.
  static TfIdfModel fit(const std::vector<TokenSequence>& corpus) {
    if (corpus.empty()) throw ConfigError("TF-IDF fit needs at least one document");
    std::map<std::string, std::size_t> df;
    for (const auto& doc : corpus) {
      const std::set<std::string> unique(doc.begin(), doc.end());
      for (const auto& term : unique) ++df[term];
    }
    TfIdfModel model;
    model.doc_count_ = corpus.size();
    const double n = static_cast<double>(corpus.size());
    for (const auto& [term, count] : df) {
      model.index_.emplace(term, model.terms_.size());
      model.terms_.push_back(term);
      model.idf_.push_back(std::log((1.0 + n) / (1.0 + static_cast<double>(count))) + 1.0);
    }
    return model;
  }

  // Raw counts times idf, then L2-normalized. Unknown terms are ignored; a
  // document without known terms maps to the zero vector.
  Vector transform(const TokenSequence& doc) const {
    Vector v = Vector::Zero(static_cast<Eigen::Index>(terms_.size()));
    for (const auto& token : doc) {
      const auto it = index_.find(token);
      if (it != index_.end()) v[static_cast<Eigen::Index>(it->second)] += 1.0;
    }
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] *= idf_[static_cast<std::size_t>(i)];
    const double norm = v.norm();
    if (norm > 0.0) v /= norm;
    return v;
  }

  Matrix transform_all(const std::vector<TokenSequence>& docs) const {
    Matrix m(static_cast<Eigen::Index>(docs.size()), static_cast<Eigen::Index>(terms_.size()));
    for (std::size_t i = 0; i < docs.size(); ++i) {
      m.row(static_cast<Eigen::Index>(i)) = transform(docs[i]).transpose();
    }
    return m;
  }

  std::size_t doc_count() const { return doc_count_; }
  std::size_t vocabulary_size() const { return terms_.size(); }
  const std::vector<std::string>& terms() const { return terms_; }
  const std::vector<double>& idf() const { return idf_; }

  std::optional<std::size_t> column(const std::string& term) const {
    const auto it = index_.find(term);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  double idf(const std::string& term) const {
    const auto c = column(term);
    if (!c) throw UsageError("term '" + term + "' is not in the vocabulary");
    return idf_[*c];
  }

 private:
  std::vector<std::string> terms_;
  std::vector<double> idf_;
  std::unordered_map<std::string, std::size_t> index_;
  std::size_t doc_count_ = 0;
};

}  // namespace gancst
