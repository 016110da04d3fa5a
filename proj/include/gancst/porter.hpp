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

// Porter suffix-stripping stemmer, original 1980 rule set (no later
// revisions such as "logi" -> "log" or "bli" -> "ble"). Input is expected
// to be lowercase ASCII letters.

#include <array>
#include <string>
#include <string_view>

namespace gancst::porter {

namespace detail {

class Word {
 public:
  explicit Word(std::string w) : w_(std::move(w)) {}

  const std::string& str() const { return w_; }
  std::string& str() { return w_; }

  // Consonant test at position i of the first `len` letters.
  bool consonant(std::size_t i) const {
    switch (w_[i]) {
      case 'a': case 'e': case 'i': case 'o': case 'u': return false;
      case 'y': return i == 0 ? true : !consonant(i - 1);
      default: return true;
    }
  }

  // Number of VC sequences in the first `len` letters.
  int measure(std::size_t len) const {
    int m = 0;
    std::size_t i = 0;
    while (i < len && consonant(i)) ++i;
    while (i < len) {
      while (i < len && !consonant(i)) ++i;
      if (i >= len) break;
      while (i < len && consonant(i)) ++i;
      ++m;
    }
    return m;
  }

  bool has_vowel(std::size_t len) const {
    for (std::size_t i = 0; i < len; ++i) {
      if (!consonant(i)) return true;
    }
    return false;
  }

  bool double_consonant(std::size_t len) const {
    return len >= 2 && w_[len - 1] == w_[len - 2] && consonant(len - 1);
  }

  // cvc where the final c is not w, x or y.
  bool cvc(std::size_t len) const {
    if (len < 3) return false;
    if (!consonant(len - 1) || consonant(len - 2) || !consonant(len - 3)) return false;
    const char c = w_[len - 1];
    return c != 'w' && c != 'x' && c != 'y';
  }

  bool ends_with(std::string_view s) const {
    return w_.size() >= s.size() && std::string_view(w_).substr(w_.size() - s.size()) == s;
  }

  std::size_t stem_len(std::string_view suffix) const { return w_.size() - suffix.size(); }

  void replace(std::string_view suffix, std::string_view with) {
    w_.resize(w_.size() - suffix.size());
    w_.append(with);
  }

 private:
  std::string w_;
};

struct Rule {
  std::string_view suffix;
  std::string_view replacement;
};

// Applies the first rule whose suffix matches when the remaining stem has
// measure > min_measure. Rule lists are ordered so that the first match is
// the longest. Once a suffix matches, later rules are not tried.
template <std::size_t N>
void apply_measure_rules(Word& w, const std::array<Rule, N>& rules, int min_measure) {
  for (const auto& r : rules) {
    if (w.ends_with(r.suffix)) {
      if (w.measure(w.stem_len(r.suffix)) > min_measure) w.replace(r.suffix, r.replacement);
      return;
    }
  }
}

inline void step1a(Word& w) {
  if (w.ends_with("sses")) {
    w.replace("sses", "ss");
  } else if (w.ends_with("ies")) {
    w.replace("ies", "i");
  } else if (w.ends_with("ss")) {
    // unchanged
  } else if (w.ends_with("s")) {
    w.replace("s", "");
  }
}

inline void step1b(Word& w) {
  bool tidy = false;
  if (w.ends_with("eed")) {
    if (w.measure(w.stem_len("eed")) > 0) w.replace("eed", "ee");
    return;
  }
  if (w.ends_with("ed")) {
    if (w.has_vowel(w.stem_len("ed"))) {
      w.replace("ed", "");
      tidy = true;
    }
  } else if (w.ends_with("ing")) {
    if (w.has_vowel(w.stem_len("ing"))) {
      w.replace("ing", "");
      tidy = true;
    }
  }
  if (!tidy) return;

  const std::size_t len = w.str().size();
  if (w.ends_with("at")) {
    w.replace("at", "ate");
  } else if (w.ends_with("bl")) {
    w.replace("bl", "ble");
  } else if (w.ends_with("iz")) {
    w.replace("iz", "ize");
  } else if (w.double_consonant(len)) {
    const char last = w.str().back();
    if (last != 'l' && last != 's' && last != 'z') w.str().pop_back();
  } else if (w.measure(len) == 1 && w.cvc(len)) {
    w.str().push_back('e');
  }
}

inline void step1c(Word& w) {
  if (w.ends_with("y") && w.has_vowel(w.stem_len("y"))) w.str().back() = 'i';
}

inline void step2(Word& w) {
  static constexpr std::array<Rule, 20> rules{{
      {"ational", "ate"}, {"tional", "tion"}, {"enci", "ence"},   {"anci", "ance"},
      {"izer", "ize"},    {"abli", "able"},   {"alli", "al"},     {"entli", "ent"},
      {"eli", "e"},       {"ousli", "ous"},   {"ization", "ize"}, {"ation", "ate"},
      {"ator", "ate"},    {"alism", "al"},    {"iveness", "ive"}, {"fulness", "ful"},
      {"ousness", "ous"}, {"aliti", "al"},    {"iviti", "ive"},   {"biliti", "ble"},
  }};
  apply_measure_rules(w, rules, 0);
}

inline void step3(Word& w) {
  static constexpr std::array<Rule, 7> rules{{
      {"icate", "ic"}, {"ative", ""}, {"alize", "al"}, {"iciti", "ic"},
      {"ical", "ic"},  {"ful", ""},   {"ness", ""},
  }};
  apply_measure_rules(w, rules, 0);
}

inline void step4(Word& w) {
  static constexpr std::array<std::string_view, 19> suffixes{
      "al",  "ance", "ence", "er",  "ic",  "able", "ible", "ant", "ement", "ment",
      "ent", "ion",  "ou",   "ism", "ate", "iti",  "ous",  "ive", "ize"};
  // Longest match wins; "ement" must be tried before "ment" and "ent".
  std::string_view best;
  for (auto s : suffixes) {
    if (w.ends_with(s) && s.size() > best.size()) best = s;
  }
  if (best.empty()) return;
  const std::size_t stem = w.stem_len(best);
  if (w.measure(stem) <= 1) return;
  if (best == "ion") {
    if (stem == 0) return;
    const char c = w.str()[stem - 1];
    if (c != 's' && c != 't') return;
  }
  w.replace(best, "");
}

inline void step5(Word& w) {
  if (w.ends_with("e")) {
    const std::size_t stem = w.stem_len("e");
    const int m = w.measure(stem);
    if (m > 1 || (m == 1 && !w.cvc(stem))) w.str().pop_back();
  }
  const std::size_t len = w.str().size();
  if (w.measure(len) > 1 && w.double_consonant(len) && w.str().back() == 'l') {
    w.str().pop_back();
  }
}

}  // namespace detail

inline std::string stem(std::string word) {
  if (word.empty()) return word;
  detail::Word w(std::move(word));
  detail::step1a(w);
  if (w.str().empty()) return w.str();
  detail::step1b(w);
  detail::step1c(w);
  detail::step2(w);
  detail::step3(w);
  detail::step4(w);
  detail::step5(w);
  return std::move(w.str());
}

}  // namespace gancst::porter
