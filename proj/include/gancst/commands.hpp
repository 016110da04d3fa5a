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

// Command implementations behind the gancst tool. Each command reads its
// inputs from the paths in a RunConfig, writes its artifacts, reads them
// back to confirm they round-trip, and returns what it wrote. Failures are
// reported by exception; the tool maps them to exit codes.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "gancst/cko.hpp"
#include "gancst/config.hpp"
#include "gancst/dataset.hpp"
#include "gancst/error.hpp"
#include "gancst/gan.hpp"
#include "gancst/gradcheck.hpp"
#include "gancst/io.hpp"
#include "gancst/metrics.hpp"
#include "gancst/ssl.hpp"
#include "gancst/text.hpp"

namespace gancst {

// Progress lines go to stderr unless quiet.
class Log {
 public:
  explicit Log(bool quiet = true, std::ostream& out = std::cerr) : quiet_(quiet), out_(&out) {}

  template <typename... Parts>
  void info(const Parts&... parts) const {
    if (quiet_) return;
    (*out_ << ... << parts) << '\n';
  }

 private:
  bool quiet_;
  std::ostream* out_;
};

namespace detail {

inline void ensure_dir(const std::string& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw Error("cannot create directory '" + dir + "': " + ec.message());
}

inline void verify_written(const std::string& path, std::string_view expected) {
  if (read_text_file(path) != expected) throw Error("artifact '" + path + "' did not read back identically");
}

inline void write_verified(const std::string& path, std::string_view content) {
  write_text_file(path, content);
  verify_written(path, content);
}

inline void save_matrix_verified(const std::string& path, const LabeledMatrix& m) {
  save_matrix(path, m);
  const auto back = load_matrix(path);
  if (back.labels != m.labels || back.x.rows() != m.x.rows() || back.x.cols() != m.x.cols() || back.x != m.x) {
    throw Error("artifact '" + path + "' did not read back identically");
  }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// cko: similarity matrix, overlay corpus, TF-IDF semantic vectors

struct CkoArtifacts {
  std::string similarity;
  std::string overlay_dir;
  std::string semantics;
  std::string vocabulary;
  Matrix sm;
  std::vector<ClassRecord> records;
  LabeledMatrix semantic_vectors;
};

inline CkoArtifacts cmd_cko(const RunConfig& cfg, const Log& log = Log()) {
  const auto classes = load_class_list(cfg.resolve(cfg.io.class_names));
  if (classes.empty()) throw ValidationError("class list is empty");
  const std::string corpus = cfg.resolve(cfg.io.corpus_dir);
  std::vector<ClassRecord> records;
  std::vector<std::string> names;
  std::vector<int> ids;
  for (const auto& c : classes) {
    records.push_back({c.class_id, c.name, load_article(corpus, c.class_id), {}});
    names.push_back(c.name);
    ids.push_back(c.class_id);
  }
  log.info("cko: ", records.size(), " classes, k = ", cfg.cko.k);

  const auto table = EmbeddingTable::load(cfg.resolve(cfg.cko.embeddings));
  CkoArtifacts out;
  out.sm = similarity_matrix(table, names, similarity_from_string(cfg.cko.similarity));
  out.records = overlay(std::move(records), out.sm, cfg.cko.k);

  const auto stopwords = load_stopwords(cfg.resolve(cfg.text.stopwords));
  std::vector<TokenSequence> docs;
  for (const auto& r : out.records) {
    docs.push_back(preprocess(cfg.text.fit_on == "original" ? r.article_original : r.article_overlay, stopwords));
  }
  const auto tfidf = TfIdfModel::fit(docs);
  out.semantic_vectors = {tfidf.transform_all(docs), ids};
  log.info("cko: vocabulary of ", tfidf.vocabulary_size(), " terms");

  const std::string out_dir = cfg.resolve(cfg.io.out_dir);
  detail::ensure_dir(out_dir);
  out.similarity = cfg.out_path("similarity.txt");
  detail::save_matrix_verified(out.similarity, {out.sm, ids});
  out.overlay_dir = cfg.out_path("overlay");
  detail::ensure_dir(out.overlay_dir);
  for (const auto& r : out.records) detail::write_verified(corpus_path(out.overlay_dir, r.class_id), r.article_overlay);
  out.semantics = cfg.out_path("semantics.txt");
  detail::save_matrix_verified(out.semantics, out.semantic_vectors);
  std::string vocab = "term\tidf\n";
  for (std::size_t i = 0; i < tfidf.terms().size(); ++i) {
    vocab += tfidf.terms()[i] + "\t" + detail::format_double(tfidf.idf()[i]) + "\n";
  }
  out.vocabulary = cfg.out_path("vocabulary.tsv");
  detail::write_verified(out.vocabulary, vocab);
  return out;
}

// ---------------------------------------------------------------------------
// synth

struct SynthArtifacts {
  std::string train, test, semantics, split;
};

inline SynthArtifacts cmd_synth(const SyntheticSpec& spec, const std::string& out_dir, const Log& log = Log()) {
  const auto data = make_synthetic(spec);
  detail::ensure_dir(out_dir);
  const std::filesystem::path dir(out_dir);
  SynthArtifacts a{(dir / "train_features.txt").string(), (dir / "test_features.txt").string(),
                   (dir / "semantics.txt").string(), (dir / "split.txt").string()};
  detail::save_matrix_verified(a.train, data.dataset.train);
  detail::save_matrix_verified(a.test, data.dataset.test);
  detail::save_matrix_verified(a.semantics, data.dataset.semantics);
  detail::write_verified(a.split, format_split(data.dataset.split));
  load_dataset(a.train, a.test, a.semantics, a.split);
  log.info("synth: ", data.dataset.train.rows(), " training and ", data.dataset.test.rows(), " test samples in ",
           out_dir);
  return a;
}

// ---------------------------------------------------------------------------
// train

// Training inputs in model space: features scaled, labels as columns.
struct PreparedTraining {
  SslData data;
  FeatureScaler scaler;
  std::vector<int> class_ids;
};

// Holds out `validation_fraction` of each seen class (at least one sample
// stays in training) for checkpoint selection. Unseen test samples form the
// unlabeled pool for pseudo-labeling.
inline PreparedTraining prepare_training(const ZslDataset& ds, double validation_fraction, std::uint64_t seed) {
  PreparedTraining p;
  p.class_ids = ds.column_order();
  const auto col = column_of(p.class_ids);
  p.data.seen_count = ds.split.seen.size();
  p.data.semantics = semantics_by_column(ds);
  if (ds.train.rows() == 0) throw ValidationError("training partition is empty");
  p.scaler = FeatureScaler::fit(ds.train.x);
  const Matrix x = p.scaler.transform(ds.train.x);

  std::map<int, std::vector<std::size_t>> rows_of;
  for (std::size_t i = 0; i < ds.train.labels.size(); ++i) rows_of[col.at(ds.train.labels[i])].push_back(i);
  Rng rng(derive_seed(seed, 10));
  std::vector<std::size_t> fit_rows, val_rows;
  for (auto& [c, rows] : rows_of) {
    rng.shuffle(rows);
    auto n_val = static_cast<std::size_t>(std::floor(validation_fraction * static_cast<double>(rows.size())));
    n_val = std::min(n_val, rows.size() - 1);
    val_rows.insert(val_rows.end(), rows.begin(), rows.begin() + static_cast<std::ptrdiff_t>(n_val));
    fit_rows.insert(fit_rows.end(), rows.begin() + static_cast<std::ptrdiff_t>(n_val), rows.end());
  }
  std::sort(fit_rows.begin(), fit_rows.end());
  std::sort(val_rows.begin(), val_rows.end());
  p.data.train.features = gather_rows(x, fit_rows);
  for (const auto r : fit_rows) p.data.train.labels.push_back(col.at(ds.train.labels[r]));
  p.data.train.pseudo.assign(fit_rows.size(), false);
  p.data.val_x = gather_rows(x, val_rows);
  for (const auto r : val_rows) p.data.val_y.push_back(col.at(ds.train.labels[r]));

  std::vector<std::size_t> unseen_rows;
  for (std::size_t i = 0; i < ds.test.labels.size(); ++i) {
    const int c = col.at(ds.test.labels[i]);
    if (static_cast<std::size_t>(c) >= p.data.seen_count) {
      unseen_rows.push_back(i);
      p.data.unseen_y.push_back(c);
    }
  }
  p.data.unseen_x = unseen_rows.empty() ? Matrix(0, ds.test.x.cols())
                                        : gather_rows(p.scaler.transform(ds.test.x), unseen_rows);
  return p;
}

struct TrainArtifacts {
  std::string checkpoint;
  std::string train_log;
  std::string ssl_report;
  Checkpoint model;
  SslResult result;
};

inline ZslDataset load_configured_dataset(const RunConfig& cfg) {
  return load_dataset(cfg.resolve(cfg.io.train_features), cfg.resolve(cfg.io.test_features),
                      cfg.resolve(cfg.io.semantics), cfg.resolve(cfg.io.split));
}

inline TrainArtifacts cmd_train(const RunConfig& cfg, const Log& log = Log()) {
  const auto ds = load_configured_dataset(cfg);
  auto prepared = prepare_training(ds, cfg.gan.validation_fraction, cfg.seed);
  const auto gc = cfg.generator_config(prepared.data.semantics.cols(), prepared.data.train.features.cols());
  const auto dc = cfg.discriminator_config(prepared.data.train.features.cols());
  log.info("train: ", prepared.data.train.size(), " training, ", prepared.data.val_y.size(), " validation, ",
           prepared.data.unseen_y.size(), " unlabeled samples; ", prepared.class_ids.size(), " classes");

  TrainArtifacts out;
  out.result = run_ssl(prepared.data, gc, dc, cfg.gan_train(), cfg.ssl_config(), cfg.seed,
                       [&](std::size_t it, const TrainLogEntry& e) {
                         log.info("train: iteration ", it, " step ", e.step, " loss_d ", e.loss_d, " loss_g ",
                                  e.loss_g, " triplet ", e.loss_triplet, " val_gacc ", e.val_gacc);
                       });
  for (const auto& r : out.result.reports) {
    log.info("ssl: iteration ", r.iteration, " retained ", r.retained, " added ", r.added, " unseen top-1 ",
             r.unseen_top1);
  }
  out.model = {out.result.model, prepared.scaler, prepared.class_ids, prepared.data.seen_count, config_hash(cfg)};

  detail::ensure_dir(cfg.resolve(cfg.io.out_dir));
  out.checkpoint = cfg.checkpoint_path();
  detail::ensure_dir(std::filesystem::path(out.checkpoint).parent_path().string());
  save_checkpoint(out.checkpoint, out.model);
  if (!(load_checkpoint(out.checkpoint) == out.model)) throw Error("checkpoint did not read back identically");
  out.train_log = cfg.out_path("train_log.tsv");
  detail::write_verified(out.train_log, format_train_log(out.result.log));
  out.ssl_report = cfg.out_path("ssl_report.tsv");
  detail::write_verified(out.ssl_report, format_ssl_report(out.result.reports));
  return out;
}

// ---------------------------------------------------------------------------
// evaluate / retrieve

// Test data mapped into the checkpoint's model space.
struct EvalData {
  Matrix x;
  std::vector<int> y;  // columns
  Matrix semantics;
  std::size_t seen_count = 0;
};

inline EvalData prepare_evaluation(const Checkpoint& ck, const ZslDataset& ds) {
  if (ds.column_order() != ck.class_ids || ds.split.seen.size() != ck.seen_count) {
    throw ValidationError("checkpoint classes or split do not match the dataset");
  }
  const auto& g = ck.model.generator.config;
  if (ds.test.x.cols() != g.visual_dim || ck.scaler.min.size() != g.visual_dim) {
    throw ValidationError("dimension mismatch: test features have " + std::to_string(ds.test.x.cols()) +
                          " dimensions, checkpoint expects " + std::to_string(g.visual_dim));
  }
  if (ds.semantics.x.cols() != g.semantic_dim) {
    throw ValidationError("dimension mismatch: semantic vectors have " + std::to_string(ds.semantics.x.cols()) +
                          " dimensions, checkpoint expects " + std::to_string(g.semantic_dim));
  }
  EvalData e;
  e.x = ck.scaler.transform(ds.test.x);
  const auto col = column_of(ck.class_ids);
  for (const int y : ds.test.labels) e.y.push_back(col.at(y));
  e.semantics = semantics_by_column(ds);
  e.seen_count = ck.seen_count;
  return e;
}

inline std::vector<std::size_t> rows_where(std::span<const int> y, auto pred) {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < y.size(); ++i) {
    if (pred(y[i])) rows.push_back(i);
  }
  return rows;
}

// mAP at each ratio: queries are the centroids of generated features of the
// unseen classes, the gallery is every unseen test sample.
inline std::vector<std::pair<int, double>> retrieval_scores(const Generator& g, const EvalData& e,
                                                            const EvalOptions& opt, std::uint64_t seed) {
  const auto unseen = unseen_columns(e.seen_count, static_cast<std::size_t>(e.semantics.rows()));
  const auto rows = rows_where(e.y, [&](int c) { return static_cast<std::size_t>(c) >= e.seen_count; });
  if (rows.empty()) throw ValidationError("retrieval needs unseen test samples");
  Rng rng(derive_seed(seed, 502));
  const Matrix generated = generate_for_classes(g, e.semantics, unseen, opt.per_class_synthetic, rng);
  const auto per = static_cast<Eigen::Index>(opt.per_class_synthetic);
  Matrix queries(static_cast<Eigen::Index>(unseen.size()), generated.cols());
  for (Eigen::Index c = 0; c < queries.rows(); ++c) queries.row(c) = generated.middleRows(c * per, per).colwise().mean();
  const Matrix images = gather_rows(e.x, rows);
  std::vector<int> labels;
  for (const auto r : rows) labels.push_back(e.y[r] - static_cast<int>(e.seen_count));
  std::vector<std::pair<int, double>> out;
  for (const double ratio : opt.retrieval_ratios) {
    out.emplace_back(static_cast<int>(std::lround(ratio * 100.0)), retrieval_map(queries, images, labels, ratio));
  }
  return out;
}

inline EvalReport evaluate_model(const Checkpoint& ck, const EvalData& e, const EvalOptions& opt, std::uint64_t seed) {
  const auto& g = ck.model.generator;
  const auto total = static_cast<std::size_t>(e.semantics.rows());
  const auto unseen = unseen_columns(e.seen_count, total);
  EvalReport r;

  const auto unseen_rows = rows_where(e.y, [&](int c) { return static_cast<std::size_t>(c) >= e.seen_count; });
  if (!unseen_rows.empty()) {
    std::vector<int> y;
    for (const auto i : unseen_rows) y.push_back(e.y[i]);
    r.top1_unseen = unseen_top1(g, e.semantics, e.seen_count, gather_rows(e.x, unseen_rows), y,
                                opt.per_class_synthetic, opt.knn_k, derive_seed(seed, 500));
  }

  const bool has_seen = unseen_rows.size() < e.y.size();
  if (has_seen && !unseen_rows.empty()) {
    Rng rng(derive_seed(seed, 501));
    const Matrix scores = knn_scores(g, e.semantics, all_columns(total), opt.per_class_synthetic, opt.knn_k, e.x, rng);
    const auto suh = gzsl_suh(scores, e.y, e.seen_count);
    r.seen = suh.seen;
    r.unseen = suh.unseen;
    r.harmonic = suh.harmonic;
    r.g_acc = generalized_accuracy(scores, e.y, e.seen_count, opt.sweep());
    r.suc_points = suc_curve(scores, e.y, e.seen_count, opt.sweep());
    r.ausuc = r.suc_points.size() >= 2 ? ausuc(r.suc_points) : 0.0;
  }
  if (!unseen_rows.empty()) r.map_at = retrieval_scores(g, e, opt, seed);
  return r;
}

struct EvalArtifacts {
  std::string report;
  std::string suc_points;
  EvalReport result;
};

inline EvalArtifacts cmd_evaluate(const RunConfig& cfg, const std::string& checkpoint_path, const Log& log = Log()) {
  const auto ck = load_checkpoint(checkpoint_path);
  const auto ds = load_configured_dataset(cfg);
  const auto e = prepare_evaluation(ck, ds);
  EvalArtifacts out;
  out.result = evaluate_model(ck, e, cfg.eval, cfg.seed);
  log.info("evaluate: top-1 unseen ", out.result.top1_unseen, "  S ", out.result.seen, "  U ", out.result.unseen,
           "  H ", out.result.harmonic, "  G_acc ", out.result.g_acc, "  AUSUC ", out.result.ausuc);
  detail::ensure_dir(cfg.resolve(cfg.io.out_dir));
  out.report = cfg.out_path("eval_report.txt");
  detail::write_verified(out.report, format_eval_report(out.result));
  out.suc_points = cfg.out_path("suc_points.tsv");
  detail::write_verified(out.suc_points, format_suc_points(out.result.suc_points));
  return out;
}

struct RetrieveArtifacts {
  std::string report;
  std::vector<std::pair<int, double>> map_at;
};

inline RetrieveArtifacts cmd_retrieve(const RunConfig& cfg, const std::string& checkpoint_path,
                                      const Log& log = Log()) {
  const auto ck = load_checkpoint(checkpoint_path);
  const auto e = prepare_evaluation(ck, load_configured_dataset(cfg));
  RetrieveArtifacts out;
  out.map_at = retrieval_scores(ck.model.generator, e, cfg.eval, cfg.seed);
  std::string text;
  for (const auto& [pct, v] : out.map_at) {
    text += "map@" + std::to_string(pct) + " = " + detail::format_double(v) + "\n";
    log.info("retrieve: mAP@", pct, "% = ", v);
  }
  detail::ensure_dir(cfg.resolve(cfg.io.out_dir));
  out.report = cfg.out_path("retrieval.txt");
  detail::write_verified(out.report, text);
  return out;
}

// ---------------------------------------------------------------------------
// grad-check

struct GradCheckSummary {
  std::vector<GradientCase> cases;
  double worst = 0.0;
  bool passed = true;
};

inline GradCheckSummary cmd_grad_check(std::uint64_t first_seed, std::size_t seeds, std::ostream& out) {
  GradCheckSummary s;
  s.cases = run_gradient_suite(first_seed, seeds);
  for (const auto& c : s.cases) {
    s.worst = std::max(s.worst, c.result.max_relative_error);
    s.passed = s.passed && c.passed();
    out << (c.passed() ? "ok  " : "FAIL") << "  " << c.name << "  seed " << c.seed << "  max relative error "
        << c.result.max_relative_error << "\n";
  }
  return s;
}

}  // namespace gancst
