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

// Run configuration: a JSON document with fixed sections. Unknown sections
// or keys are rejected, as are values of the wrong type or out of range.
// Relative paths are resolved against the directory of the config file.
// The accepted document is described by schema/config.schema.json.

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <type_traits>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/gan.hpp"
#include "gancst/io.hpp"
#include "gancst/metrics.hpp"
#include "gancst/ssl.hpp"

namespace gancst {

inline constexpr int kConfigVersion = 1;

struct TextOptions {
  std::string stopwords = "stopwords_en.txt";
  std::string fit_on = "overlay";  // or "original"
};

struct CkoOptions {
  std::size_t k = 1;
  std::string similarity = "cosine";
  std::string embeddings = "embeddings.txt";
};

struct GanOptions {
  double margin = 0.1;
  double lambda_t = 1.0;
  std::size_t n_d = 5;
  std::size_t n_step = 10000;
  std::size_t patience = 100;
  std::size_t batch_size = 1000;
  std::size_t n_pos = 5;
  std::size_t n_neg = 5;
  double alpha = 0.001;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
  double gp_weight = 10.0;
  std::size_t eval_every = 40;
  std::size_t knn_k = 20;
  std::size_t probe_per_class = 60;
  std::string critic_sign = "adversarial";
  std::size_t reduce_dim = 1000;
  std::size_t noise_dim = 0;
  std::size_t hidden_dim = 2048;
  std::size_t disc_hidden_dim = 1024;
  double noise_sigma = 1.0;
  std::string noise_mode = "additive";
  double leaky_slope = 0.2;
  double validation_fraction = 0.1;
};

struct EvalOptions {
  double lambda_min = -2.0;
  double lambda_max = 2.0;
  double delta = 0.01;
  std::vector<double> retrieval_ratios{0.25, 0.5, 1.0};
  std::size_t knn_k = 20;
  std::size_t per_class_synthetic = 60;

  CalibrationSweep sweep() const { return {lambda_min, lambda_max, delta}; }
};

struct SslOptions {
  double psi = 0.5;
  std::size_t n_ssl = 1;
  std::size_t per_class_synthetic = 60;
};

struct IoOptions {
  std::string corpus_dir = "corpus";
  std::string class_names = "classes.txt";
  std::string train_features = "train_features.txt";
  std::string test_features = "test_features.txt";
  std::string semantics = "semantics.txt";
  std::string split = "split.txt";
  std::string out_dir = "out";
  std::string checkpoint;  // empty: <out_dir>/checkpoint.json
};

struct RunConfig {
  std::uint64_t seed = 0;
  TextOptions text;
  CkoOptions cko;
  GanOptions gan;
  SslOptions ssl;
  EvalOptions eval;
  IoOptions io;
  std::filesystem::path base_dir;  // not part of the document

  std::string resolve(const std::string& p) const {
    if (p.empty()) return p;
    const std::filesystem::path path(p);
    if (path.is_absolute() || base_dir.empty()) return path.string();
    return (base_dir / path).lexically_normal().string();
  }

  std::string out_path(const std::string& name) const {
    return (std::filesystem::path(resolve(io.out_dir)) / name).string();
  }

  std::string checkpoint_path() const {
    return io.checkpoint.empty() ? out_path("checkpoint.json") : resolve(io.checkpoint);
  }

  GanTrainConfig gan_train() const {
    GanTrainConfig t;
    t.margin = gan.margin;
    t.lambda_t = gan.lambda_t;
    t.n_d = gan.n_d;
    t.n_step = gan.n_step;
    t.patience = gan.patience;
    t.batch_size = gan.batch_size;
    t.n_pos = gan.n_pos;
    t.n_neg = gan.n_neg;
    t.adam = {gan.alpha, gan.beta1, gan.beta2, gan.epsilon};
    t.gp_weight = gan.gp_weight;
    t.eval_every = gan.eval_every;
    t.knn_k = gan.knn_k;
    t.probe_per_class = gan.probe_per_class;
    t.critic_sign = critic_sign_from_string(gan.critic_sign);
    t.sweep = eval.sweep();
    t.validate();
    return t;
  }

  GeneratorConfig generator_config(Eigen::Index semantic_dim, Eigen::Index visual_dim) const {
    GeneratorConfig g;
    g.semantic_dim = semantic_dim;
    g.reduce_dim = static_cast<Eigen::Index>(gan.reduce_dim);
    g.noise_dim = static_cast<Eigen::Index>(gan.noise_dim);
    g.hidden_dim = static_cast<Eigen::Index>(gan.hidden_dim);
    g.visual_dim = visual_dim;
    g.noise_sigma = gan.noise_sigma;
    g.noise_mode = noise_mode_from_string(gan.noise_mode);
    g.leaky_slope = gan.leaky_slope;
    g.validate();
    return g;
  }

  DiscriminatorConfig discriminator_config(Eigen::Index visual_dim) const {
    DiscriminatorConfig d;
    d.visual_dim = visual_dim;
    d.hidden_dim = static_cast<Eigen::Index>(gan.disc_hidden_dim);
    return d;
  }

  SslConfig ssl_config() const {
    SslConfig s{ssl.psi, ssl.n_ssl, ssl.per_class_synthetic};
    s.validate();
    return s;
  }
};

namespace detail {

// JSON parsed from text stores non-negative integers as unsigned; values
// built in code may be signed.
inline bool is_non_negative_integer(const nlohmann::json& v) {
  return v.is_number_unsigned() || (v.is_number_integer() && v.get<std::int64_t>() >= 0);
}

template <typename T>
T read_config_value(const nlohmann::json& v, const std::string& where) {
  auto fail = [&](const char* what) { return ValidationError("config key " + where + " must be " + what); };
  if constexpr (std::is_same_v<T, double>) {
    if (!v.is_number()) throw fail("a number");
    return v.get<double>();
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (!v.is_string()) throw fail("a string");
    return v.get<std::string>();
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (!v.is_array()) throw fail("an array of numbers");
    std::vector<double> out;
    for (const auto& e : v) out.push_back(read_config_value<double>(e, where));
    return out;
  } else {
    static_assert(std::is_unsigned_v<T>);
    if (!is_non_negative_integer(v)) throw fail("a non-negative integer");
    return v.get<T>();
  }
}

// Visits every (section, key, member) of a config. The same walk drives
// parsing, serialization and schema checks so the three stay in sync.
template <typename Visitor>
void visit_config(RunConfig& c, Visitor&& v) {
  v("text", "stopwords", c.text.stopwords);
  v("text", "fit_on", c.text.fit_on);
  v("cko", "k", c.cko.k);
  v("cko", "similarity", c.cko.similarity);
  v("cko", "embeddings", c.cko.embeddings);
  auto& g = c.gan;
  v("gan", "margin", g.margin);
  v("gan", "lambda_t", g.lambda_t);
  v("gan", "n_d", g.n_d);
  v("gan", "n_step", g.n_step);
  v("gan", "patience", g.patience);
  v("gan", "batch_size", g.batch_size);
  v("gan", "n_pos", g.n_pos);
  v("gan", "n_neg", g.n_neg);
  v("gan", "alpha", g.alpha);
  v("gan", "beta1", g.beta1);
  v("gan", "beta2", g.beta2);
  v("gan", "epsilon", g.epsilon);
  v("gan", "gp_weight", g.gp_weight);
  v("gan", "eval_every", g.eval_every);
  v("gan", "knn_k", g.knn_k);
  v("gan", "probe_per_class", g.probe_per_class);
  v("gan", "critic_sign", g.critic_sign);
  v("gan", "reduce_dim", g.reduce_dim);
  v("gan", "noise_dim", g.noise_dim);
  v("gan", "hidden_dim", g.hidden_dim);
  v("gan", "disc_hidden_dim", g.disc_hidden_dim);
  v("gan", "noise_sigma", g.noise_sigma);
  v("gan", "noise_mode", g.noise_mode);
  v("gan", "leaky_slope", g.leaky_slope);
  v("gan", "validation_fraction", g.validation_fraction);
  v("ssl", "psi", c.ssl.psi);
  v("ssl", "n_ssl", c.ssl.n_ssl);
  v("ssl", "per_class_synthetic", c.ssl.per_class_synthetic);
  v("eval", "lambda_min", c.eval.lambda_min);
  v("eval", "lambda_max", c.eval.lambda_max);
  v("eval", "delta", c.eval.delta);
  v("eval", "retrieval_ratios", c.eval.retrieval_ratios);
  v("eval", "knn_k", c.eval.knn_k);
  v("eval", "per_class_synthetic", c.eval.per_class_synthetic);
  v("io", "corpus_dir", c.io.corpus_dir);
  v("io", "class_names", c.io.class_names);
  v("io", "train_features", c.io.train_features);
  v("io", "test_features", c.io.test_features);
  v("io", "semantics", c.io.semantics);
  v("io", "split", c.io.split);
  v("io", "out_dir", c.io.out_dir);
  v("io", "checkpoint", c.io.checkpoint);
}

}  // namespace detail

// Range and enumeration checks that go beyond types.
inline void validate_config(const RunConfig& c) {
  auto bad = [](const std::string& what) { throw ValidationError("config: " + what); };
  if (c.text.fit_on != "overlay" && c.text.fit_on != "original") bad("text.fit_on must be overlay or original");
  if (c.cko.similarity != "cosine" && c.cko.similarity != "neg_euclidean") {
    bad("cko.similarity must be cosine or neg_euclidean");
  }
  if (c.gan.validation_fraction < 0.0 || c.gan.validation_fraction >= 1.0) {
    bad("gan.validation_fraction must lie in [0, 1)");
  }
  if (c.gan.reduce_dim < 1 || c.gan.hidden_dim < 1 || c.gan.disc_hidden_dim < 1) bad("gan layer widths must be >= 1");
  if (c.gan.noise_mode == "additive" && c.gan.noise_dim != 0 && c.gan.noise_dim != c.gan.reduce_dim) {
    bad("additive noise needs gan.noise_dim equal to gan.reduce_dim (or 0)");
  }
  if (c.gan.noise_sigma < 0.0) bad("gan.noise_sigma must be non-negative");
  if (c.eval.knn_k < 1 || c.eval.per_class_synthetic < 1) bad("eval.knn_k and eval.per_class_synthetic must be >= 1");
  for (const double r : c.eval.retrieval_ratios) {
    if (!(r > 0.0 && r <= 1.0)) bad("eval.retrieval_ratios entries must lie in (0, 1]");
  }
  try {
    (void)c.gan_train();
    (void)c.ssl_config();
    (void)noise_mode_from_string(c.gan.noise_mode);
  } catch (const ConfigError& e) {
    bad(e.what());
  }
}

inline RunConfig config_from_json(const nlohmann::json& j, std::filesystem::path base_dir = {}) {
  if (!j.is_object()) throw ValidationError("config document must be a JSON object");
  RunConfig c;
  c.base_dir = std::move(base_dir);
  std::map<std::string, std::map<std::string, std::function<void(const nlohmann::json&)>>> readers;
  detail::visit_config(c, [&](const char* section, const char* key, auto& member) {
    using T = std::decay_t<decltype(member)>;
    const std::string where = std::string("'") + section + "." + key + "'";
    readers[section][key] = [&member, where](const nlohmann::json& v) {
      member = detail::read_config_value<T>(v, where);
    };
  });
  for (const auto& [section, body] : j.items()) {
    if (section == "version") {
      if (!body.is_number_integer() || body.get<int>() != kConfigVersion) {
        throw ValidationError("unsupported config version " + body.dump());
      }
      continue;
    }
    if (section == "seed") {
      if (!detail::is_non_negative_integer(body)) throw ValidationError("config key 'seed' must be a non-negative integer");
      c.seed = body.get<std::uint64_t>();
      continue;
    }
    const auto sec = readers.find(section);
    if (sec == readers.end()) throw ValidationError("unknown config section '" + section + "'");
    if (!body.is_object()) throw ValidationError("config section '" + section + "' must be an object");
    for (const auto& [key, value] : body.items()) {
      const auto reader = sec->second.find(key);
      if (reader == sec->second.end()) throw ValidationError("unknown config key '" + section + "." + key + "'");
      reader->second(value);
    }
  }
  validate_config(c);
  return c;
}

inline nlohmann::json config_to_json(const RunConfig& config) {
  RunConfig c = config;
  nlohmann::json j;
  j["version"] = kConfigVersion;
  j["seed"] = c.seed;
  detail::visit_config(c, [&](const char* section, const char* key, auto& member) { j[section][key] = member; });
  return j;
}

// Hash of the canonical serialization; stored in checkpoints.
inline std::string config_hash(const RunConfig& c) { return fnv1a_hex(config_to_json(c).dump()); }

// Applies "section.key=value" to a raw document. The value is parsed as
// JSON when possible, otherwise taken as a string.
inline void apply_override(nlohmann::json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ValidationError("override '" + assignment + "' is not of the form key=value");
  const std::string path = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  nlohmann::json value = nlohmann::json::parse(raw, nullptr, false);
  if (value.is_discarded()) value = raw;
  const auto dot = path.find('.');
  if (dot == std::string::npos) {
    doc[path] = value;
  } else {
    doc[path.substr(0, dot)][path.substr(dot + 1)] = value;
  }
}

inline RunConfig load_config(const std::string& path, const std::vector<std::string>& overrides = {}) {
  nlohmann::json doc = nlohmann::json::object();
  std::filesystem::path base;
  if (!path.empty()) {
    const std::string text = read_text_file(path);
    doc = nlohmann::json::parse(text, nullptr, false);
    if (doc.is_discarded()) throw ParseError("config '" + path + "' is not valid JSON", 0);
    base = std::filesystem::path(path).parent_path();
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc, base);
}

// Sections and keys the parser accepts, for schema consistency checks.
inline std::map<std::string, std::vector<std::string>> config_keys() {
  RunConfig c;
  std::map<std::string, std::vector<std::string>> keys;
  detail::visit_config(c, [&](const char* section, const char* key, auto&) { keys[section].push_back(key); });
  return keys;
}

}  // namespace gancst
