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

// Knowledge-to-visual generator and dual-head critic/classifier, their
// losses with analytic gradients, and the adversarial training loop with
// triplet regularization, periodic kNN validation and early stopping.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/knn.hpp"
#include "gancst/metrics.hpp"
#include "gancst/nn.hpp"
#include "gancst/rng.hpp"

namespace gancst {

// ---------------------------------------------------------------------------
// Generator

enum class NoiseMode { kAdditive, kConcat };

inline NoiseMode noise_mode_from_string(const std::string& s) {
  if (s == "additive") return NoiseMode::kAdditive;
  if (s == "concat") return NoiseMode::kConcat;
  throw ConfigError("unknown noise mode '" + s + "' (expected additive or concat)");
}

inline std::string to_string(NoiseMode m) { return m == NoiseMode::kAdditive ? "additive" : "concat"; }

struct GeneratorConfig {
  Eigen::Index semantic_dim = 0;
  Eigen::Index reduce_dim = 1000;
  // Additive mode requires noise_dim == reduce_dim; 0 means "same as reduce_dim".
  Eigen::Index noise_dim = 0;
  Eigen::Index hidden_dim = 2048;
  Eigen::Index visual_dim = 0;
  double noise_sigma = 1.0;
  NoiseMode noise_mode = NoiseMode::kAdditive;
  double leaky_slope = 0.2;

  Eigen::Index effective_noise_dim() const { return noise_dim == 0 ? reduce_dim : noise_dim; }

  void validate() const {
    if (semantic_dim < 1 || reduce_dim < 1 || hidden_dim < 1 || visual_dim < 1 || effective_noise_dim() < 1) {
      throw ConfigError("generator dimensions must all be >= 1");
    }
    if (noise_mode == NoiseMode::kAdditive && effective_noise_dim() != reduce_dim) {
      throw ConfigError("additive noise needs noise_dim == reduce_dim");
    }
    if (noise_sigma < 0.0) throw ConfigError("noise_sigma must be non-negative");
  }
};

struct GeneratorGradients {
  MlpGradients reduce;
  MlpGradients body;
};

struct GeneratorForward {
  Matrix output;
  ForwardCache reduce;
  ForwardCache body;
};

// semantic -> FC(reduce_dim) -> (+ noise | concat noise)
//          -> FC(hidden, leaky_relu) -> FC(visual, tanh)
struct Generator {
  GeneratorConfig config;
  Mlp reduce;
  Mlp body;

  static Generator make(const GeneratorConfig& config, Rng& rng) {
    config.validate();
    Generator g;
    g.config = config;
    const LayerSpec reduce_spec[] = {{config.reduce_dim, Activation::identity()}};
    g.reduce = Mlp::make(config.semantic_dim, reduce_spec, rng);
    const Eigen::Index body_in =
        config.noise_mode == NoiseMode::kAdditive ? config.reduce_dim : config.reduce_dim + config.effective_noise_dim();
    const LayerSpec body_spec[] = {{config.hidden_dim, Activation::leaky_relu(config.leaky_slope)},
                                   {config.visual_dim, Activation::tanh()}};
    g.body = Mlp::make(body_in, body_spec, rng);
    return g;
  }

  Matrix sample_noise(Eigen::Index rows, Rng& rng) const {
    Matrix z(rows, config.effective_noise_dim());
    for (Eigen::Index i = 0; i < z.size(); ++i) z.data()[i] = rng.normal(0.0, config.noise_sigma);
    return z;
  }

  GeneratorForward forward(const Matrix& semantics, const Matrix& noise) const {
    if (semantics.rows() != noise.rows()) throw UsageError("generator: semantic and noise row counts differ");
    if (semantics.cols() != config.semantic_dim) {
      throw UsageError("generator: semantic dimension " + std::to_string(semantics.cols()) + ", expected " +
                       std::to_string(config.semantic_dim));
    }
    if (noise.cols() != config.effective_noise_dim()) throw UsageError("generator: noise dimension mismatch");
    GeneratorForward f;
    auto reduced = mlp_forward(reduce, semantics);
    f.reduce = std::move(reduced.cache);
    Matrix hidden_in;
    if (config.noise_mode == NoiseMode::kAdditive) {
      hidden_in = reduced.output + noise;
    } else {
      hidden_in.resize(semantics.rows(), config.reduce_dim + noise.cols());
      hidden_in << reduced.output, noise;
    }
    auto out = mlp_forward(body, hidden_in);
    f.body = std::move(out.cache);
    f.output = std::move(out.output);
    return f;
  }

  Matrix generate(const Matrix& semantics, const Matrix& noise) const { return forward(semantics, noise).output; }

  GeneratorGradients backward(const GeneratorForward& f, const Matrix& upstream) const {
    GeneratorGradients g;
    g.body = mlp_backward(body, f.body, upstream);
    Matrix d_reduced = config.noise_mode == NoiseMode::kAdditive
                           ? g.body.input
                           : Matrix(g.body.input.leftCols(config.reduce_dim));
    g.reduce = mlp_backward(reduce, f.reduce, d_reduced);
    return g;
  }

  ParamSpans parameters() {
    ParamSpans s;
    append_spans(s, reduce);
    append_spans(s, body);
    return s;
  }

  friend bool operator==(const Generator& a, const Generator& b) {
    return a.reduce == b.reduce && a.body == b.body;
  }
};

inline ParamSpans gradient_spans(GeneratorGradients& g) {
  ParamSpans s;
  append_spans(s, g.reduce);
  append_spans(s, g.body);
  return s;
}

// ---------------------------------------------------------------------------
// Discriminator

struct DiscriminatorConfig {
  Eigen::Index visual_dim = 0;
  Eigen::Index hidden_dim = 1024;
  Eigen::Index num_classes = 1;

  void validate() const {
    if (visual_dim < 1 || hidden_dim < 1) throw ConfigError("discriminator dimensions must be >= 1");
    if (num_classes < 1) throw ConfigError("discriminator needs at least one class");
  }
};

struct DiscriminatorForward {
  Vector critic;
  Matrix logits;
  ForwardCache trunk;
  ForwardCache critic_head;
  ForwardCache class_head;
};

struct DiscriminatorGradients {
  MlpGradients trunk;
  MlpGradients critic_head;
  MlpGradients class_head;
  Matrix input;

  DiscriminatorGradients& operator+=(const DiscriminatorGradients& o) {
    trunk += o.trunk;
    critic_head += o.critic_head;
    class_head += o.class_head;
    return *this;
  }
};

// visual -> FC(hidden, relu) -> { critic: FC(1), classifier: FC(num_classes) }
struct Discriminator {
  DiscriminatorConfig config;
  Mlp trunk;
  Mlp critic_head;
  Mlp class_head;

  static Discriminator make(const DiscriminatorConfig& config, Rng& rng) {
    config.validate();
    Discriminator d;
    d.config = config;
    const LayerSpec trunk_spec[] = {{config.hidden_dim, Activation::relu()}};
    d.trunk = Mlp::make(config.visual_dim, trunk_spec, rng);
    const LayerSpec critic_spec[] = {{1, Activation::identity()}};
    d.critic_head = Mlp::make(config.hidden_dim, critic_spec, rng);
    const LayerSpec class_spec[] = {{config.num_classes, Activation::identity()}};
    d.class_head = Mlp::make(config.hidden_dim, class_spec, rng);
    return d;
  }

  DiscriminatorForward forward(const Matrix& x) const {
    if (x.cols() != config.visual_dim) {
      throw UsageError("discriminator: input dimension " + std::to_string(x.cols()) + ", expected " +
                       std::to_string(config.visual_dim));
    }
    DiscriminatorForward f;
    auto t = mlp_forward(trunk, x);
    auto c = mlp_forward(critic_head, t.output);
    auto k = mlp_forward(class_head, t.output, true);
    f.critic = c.output.col(0);
    f.logits = std::move(k.output);
    f.trunk = std::move(t.cache);
    f.critic_head = std::move(c.cache);
    f.class_head = std::move(k.cache);
    return f;
  }

  DiscriminatorGradients backward(const DiscriminatorForward& f, const Vector& d_critic,
                                  const Matrix& d_logits) const {
    DiscriminatorGradients g;
    g.critic_head = mlp_backward(critic_head, f.critic_head, Matrix(d_critic));
    g.class_head = mlp_backward(class_head, f.class_head, d_logits);
    g.trunk = mlp_backward(trunk, f.trunk, g.critic_head.input + g.class_head.input);
    g.input = g.trunk.input;
    return g;
  }

  ParamSpans parameters() {
    ParamSpans s;
    append_spans(s, trunk);
    append_spans(s, critic_head);
    append_spans(s, class_head);
    return s;
  }

  friend bool operator==(const Discriminator& a, const Discriminator& b) {
    return a.trunk == b.trunk && a.critic_head == b.critic_head && a.class_head == b.class_head;
  }
};

inline ParamSpans gradient_spans(DiscriminatorGradients& g) {
  ParamSpans s;
  append_spans(s, g.trunk);
  append_spans(s, g.critic_head);
  append_spans(s, g.class_head);
  return s;
}

// Grows the classifier head to `new_class_count` outputs. Existing columns
// are kept bit-exactly; new columns get Glorot weights and zero bias.
inline void expand_classifier_head(Discriminator& d, Eigen::Index new_class_count, Rng& rng) {
  const Eigen::Index current = d.config.num_classes;
  if (new_class_count < current) {
    throw UsageError("cannot shrink the classifier head from " + std::to_string(current) + " to " +
                     std::to_string(new_class_count) + " classes");
  }
  if (new_class_count == current) return;
  auto& layer = d.class_head.layers.front();
  const Eigen::Index fan_in = layer.fan_in();
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + new_class_count));
  Matrix weight(fan_in, new_class_count);
  weight.leftCols(current) = layer.weight;
  for (Eigen::Index r = 0; r < fan_in; ++r) {
    for (Eigen::Index c = current; c < new_class_count; ++c) weight(r, c) = rng.uniform(-limit, limit);
  }
  Vector bias = Vector::Zero(new_class_count);
  bias.head(current) = layer.bias;
  layer.weight = std::move(weight);
  layer.bias = std::move(bias);
  d.config.num_classes = new_class_count;
}

// ---------------------------------------------------------------------------
// Losses. Each returns its value and gradients with respect to its inputs.

struct CrossEntropyResult {
  double value = 0.0;
  Matrix d_logits;
};

// Mean softmax cross-entropy over rows.
inline CrossEntropyResult cross_entropy(const Matrix& logits, std::span<const int> labels) {
  if (static_cast<std::size_t>(logits.rows()) != labels.size()) {
    throw UsageError("cross-entropy: logits rows do not match label count");
  }
  CrossEntropyResult r;
  r.d_logits.resize(logits.rows(), logits.cols());
  if (logits.rows() == 0) return r;
  const double inv = 1.0 / static_cast<double>(logits.rows());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= logits.cols()) {
      throw UsageError("label " + std::to_string(y) + " outside the " + std::to_string(logits.cols()) +
                       "-class head");
    }
    const double peak = logits.row(i).maxCoeff();
    const Eigen::RowVectorXd e = (logits.row(i).array() - peak).exp().matrix();
    const double z = e.sum();
    r.value += (std::log(z) + peak - logits(i, y)) * inv;
    r.d_logits.row(i) = e / z * inv;
    r.d_logits(i, y) -= inv;
  }
  return r;
}

struct TripletLossResult {
  double value = 0.0;
  Matrix d_anchors;
};

// max( (1/C) * sum_c [ mean_i |a_c - p_c,i| - mean_i |a_c - n_c,i| ] + margin, 0 )
// with one anchor row per class entry.
inline TripletLossResult triplet_loss(const Matrix& anchors, const std::vector<Matrix>& positives,
                                      const std::vector<Matrix>& negatives, double margin) {
  const auto c_count = static_cast<std::size_t>(anchors.rows());
  if (positives.size() != c_count || negatives.size() != c_count) {
    throw UsageError("triplet loss: need one positive and one negative set per anchor");
  }
  if (c_count == 0) throw UsageError("triplet loss: no anchors");
  TripletLossResult r;
  r.d_anchors = Matrix::Zero(anchors.rows(), anchors.cols());
  double inner = 0.0;
  for (std::size_t c = 0; c < c_count; ++c) {
    const auto& pos = positives[c];
    const auto& neg = negatives[c];
    if (pos.rows() == 0 || neg.rows() == 0) {
      throw UsageError("triplet loss: empty positive or negative set for anchor " + std::to_string(c));
    }
    if (pos.cols() != anchors.cols() || neg.cols() != anchors.cols()) {
      throw UsageError("triplet loss: sample dimension mismatch");
    }
    const auto a = anchors.row(static_cast<Eigen::Index>(c));
    auto mean_distance = [&](const Matrix& set, double sign) {
      double sum = 0.0;
      const double inv = 1.0 / static_cast<double>(set.rows());
      for (Eigen::Index i = 0; i < set.rows(); ++i) {
        const Eigen::RowVectorXd diff = a - set.row(i);
        const double d = diff.norm();
        sum += d;
        if (d > 0.0) r.d_anchors.row(static_cast<Eigen::Index>(c)) += sign * inv * diff / d;
      }
      return sum * inv;
    };
    inner += mean_distance(pos, 1.0) - mean_distance(neg, -1.0);
  }
  const double inv_c = 1.0 / static_cast<double>(c_count);
  const double pre = inner * inv_c + margin;
  if (pre > 0.0) {
    r.value = pre;
    r.d_anchors *= inv_c;
  } else {
    r.value = 0.0;
    r.d_anchors.setZero();
  }
  return r;
}

// Sign convention for the Wasserstein term of the generator objective.
// kAdversarial: mean critic(real) - mean critic(fake), so the generator
// raises the critic score of its samples. kAsWritten: mean critic(fake) -
// mean critic(real), the same orientation as the critic's own loss.
enum class CriticSign { kAdversarial, kAsWritten };

inline CriticSign critic_sign_from_string(const std::string& s) {
  if (s == "adversarial") return CriticSign::kAdversarial;
  if (s == "as_written") return CriticSign::kAsWritten;
  throw ConfigError("unknown generator critic sign '" + s + "' (expected adversarial or as_written)");
}

inline std::string to_string(CriticSign s) { return s == CriticSign::kAdversarial ? "adversarial" : "as_written"; }

struct GeneratorLossTerms {
  double critic_fake = 0.0;  // mean critic output on generated features
  double critic_real = 0.0;  // mean critic output on real features
  double ce_fake = 0.0;
  double ce_real = 0.0;
  double triplet = 0.0;
};

inline double generator_loss(const GeneratorLossTerms& t, double lambda_t,
                             CriticSign sign = CriticSign::kAdversarial) {
  const double wasserstein =
      sign == CriticSign::kAdversarial ? t.critic_real - t.critic_fake : t.critic_fake - t.critic_real;
  return wasserstein + 0.5 * (t.ce_fake + t.ce_real) + lambda_t * t.triplet;
}

struct GeneratorObjective {
  double value = 0.0;
  double triplet = 0.0;
  GeneratorGradients grads;
};

// Generator objective for one batch with all randomness supplied:
// Wasserstein term + (CE(fake) + CE(real)) / 2 + lambda_t * triplet, and
// its gradient with respect to the generator parameters.
inline GeneratorObjective generator_objective(const Generator& g, const Discriminator& d, const Matrix& semantics,
                                              const Matrix& noise, const Matrix& real, std::span<const int> slots,
                                              const std::vector<Matrix>& positives,
                                              const std::vector<Matrix>& negatives, double margin, double lambda_t,
                                              CriticSign sign) {
  const auto m = semantics.rows();
  if (m == 0 || real.rows() != m || static_cast<std::size_t>(m) != slots.size()) {
    throw UsageError("generator objective: batch shapes differ");
  }
  const auto gf = g.forward(semantics, noise);
  const auto df_fake = d.forward(gf.output);
  const auto df_real = d.forward(real);
  const auto ce_fake = cross_entropy(df_fake.logits, slots);
  const auto ce_real = cross_entropy(df_real.logits, slots);
  const auto trip = triplet_loss(gf.output, positives, negatives, margin);

  GeneratorLossTerms terms;
  terms.critic_fake = df_fake.critic.mean();
  terms.critic_real = df_real.critic.mean();
  terms.ce_fake = ce_fake.value;
  terms.ce_real = ce_real.value;
  terms.triplet = trip.value;

  GeneratorObjective out;
  out.value = generator_loss(terms, lambda_t, sign);
  out.triplet = trip.value;
  const double inv = 1.0 / static_cast<double>(m);
  const double critic_grad = sign == CriticSign::kAdversarial ? -inv : inv;
  const auto dg = d.backward(df_fake, Vector::Constant(m, critic_grad), 0.5 * ce_fake.d_logits);
  const Matrix d_fake = dg.input + lambda_t * trip.d_anchors;
  out.grads = g.backward(gf, d_fake);
  return out;
}

struct GradientPenaltyResult {
  double value = 0.0;
  Matrix d_trunk_weight;   // (visual_dim x hidden)
  Matrix d_critic_weight;  // (hidden x 1)
};

// mean_i (|grad_x critic(x_i)| - 1)^2 evaluated in closed form for the
// single-hidden-layer ReLU critic. The ReLU mask is treated as constant,
// which is exact away from activation kinks.
inline GradientPenaltyResult gradient_penalty(const Discriminator& d, const Matrix& points) {
  const auto& w1 = d.trunk.layers.front().weight;        // visual x hidden
  const auto& b1 = d.trunk.layers.front().bias;
  const auto& w2 = d.critic_head.layers.front().weight;  // hidden x 1
  GradientPenaltyResult r;
  r.d_trunk_weight = Matrix::Zero(w1.rows(), w1.cols());
  r.d_critic_weight = Matrix::Zero(w2.rows(), 1);
  if (points.rows() == 0) return r;
  Matrix pre = points * w1;
  pre.rowwise() += b1.transpose();
  const Matrix mask = pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
  // a_i = w2 .* mask_i, g_i = W1 a_i
  const Matrix a = mask.array().rowwise() * w2.col(0).transpose().array();
  const Matrix g = a * w1.transpose();  // rows x visual
  const double inv = 1.0 / static_cast<double>(points.rows());
  Matrix u = Matrix::Zero(g.rows(), g.cols());
  for (Eigen::Index i = 0; i < g.rows(); ++i) {
    const double n = g.row(i).norm();
    r.value += (n - 1.0) * (n - 1.0) * inv;
    if (n > 0.0) u.row(i) = 2.0 * inv * (n - 1.0) / n * g.row(i);
  }
  r.d_trunk_weight = u.transpose() * a;
  r.d_critic_weight = (mask.cwiseProduct(u * w1)).colwise().sum().transpose();
  return r;
}

struct DiscriminatorLossResult {
  double value = 0.0;
  double wasserstein = 0.0;
  double penalty = 0.0;
  double ce_fake = 0.0;
  double ce_real = 0.0;
  DiscriminatorGradients grads;
};

// mean critic(fake) - mean critic(real) + gp_weight * GP(interpolates)
//   + (CE(fake) + CE(real)) / 2
inline DiscriminatorLossResult discriminator_loss(const Discriminator& d, const Matrix& real, const Matrix& fake,
                                                  std::span<const int> labels, const Matrix& interpolates,
                                                  double gp_weight) {
  if (real.rows() != fake.rows() || static_cast<std::size_t>(real.rows()) != labels.size()) {
    throw UsageError("discriminator loss: batch shapes differ");
  }
  if (real.rows() == 0) throw UsageError("discriminator loss: empty batch");
  const double inv = 1.0 / static_cast<double>(real.rows());
  const auto f_fake = d.forward(fake);
  const auto f_real = d.forward(real);
  const auto ce_fake = cross_entropy(f_fake.logits, labels);
  const auto ce_real = cross_entropy(f_real.logits, labels);

  DiscriminatorLossResult r;
  r.wasserstein = f_fake.critic.mean() - f_real.critic.mean();
  r.ce_fake = ce_fake.value;
  r.ce_real = ce_real.value;
  r.grads = d.backward(f_fake, Vector::Constant(fake.rows(), inv), 0.5 * ce_fake.d_logits);
  r.grads += d.backward(f_real, Vector::Constant(real.rows(), -inv), 0.5 * ce_real.d_logits);
  if (gp_weight != 0.0) {
    const auto gp = gradient_penalty(d, interpolates);
    r.penalty = gp.value;
    r.grads.trunk.weight[0] += gp_weight * gp.d_trunk_weight;
    r.grads.critic_head.weight[0] += gp_weight * gp.d_critic_weight;
  }
  r.value = r.wasserstein + gp_weight * r.penalty + 0.5 * (r.ce_fake + r.ce_real);
  return r;
}

// ---------------------------------------------------------------------------
// Training

struct GanTrainConfig {
  double margin = 0.1;
  double lambda_t = 1.0;
  std::size_t n_d = 5;
  std::size_t n_step = 10000;
  std::size_t patience = 100;
  std::size_t batch_size = 1000;
  std::size_t n_pos = 5;
  std::size_t n_neg = 5;
  AdamConfig adam;
  double gp_weight = 10.0;
  std::size_t eval_every = 40;
  std::size_t knn_k = 20;
  std::size_t probe_per_class = 60;
  CriticSign critic_sign = CriticSign::kAdversarial;
  CalibrationSweep sweep;

  void validate() const {
    if (margin < 0.0) throw ConfigError("margin must be non-negative");
    if (n_d < 1) throw ConfigError("n_d must be >= 1");
    if (batch_size < 1) throw ConfigError("batch size must be >= 1");
    if (n_pos < 1 || n_neg < 1) throw ConfigError("triplet sample counts must be >= 1");
    if (eval_every < 1) throw ConfigError("eval_every must be >= 1");
    if (knn_k < 1) throw ConfigError("knn_k must be >= 1");
    if (gp_weight < 0.0) throw ConfigError("gp_weight must be non-negative");
    sweep.validate();
  }
};

// Generator, discriminator and the mapping from classifier-head slots to
// global class columns.
struct GanModel {
  Generator generator;
  Discriminator discriminator;
  std::vector<int> head_classes;

  friend bool operator==(const GanModel&, const GanModel&) = default;
};

// Rows of features with global class columns as labels. `pseudo` marks rows
// that came from pseudo-labeling.
struct TrainingSet {
  Matrix features;
  std::vector<int> labels;
  std::vector<bool> pseudo;

  std::size_t size() const { return labels.size(); }
};

struct TrainLogEntry {
  std::size_t step = 0;
  double loss_d = 0.0;
  double loss_g = 0.0;
  double loss_triplet = 0.0;
  double val_gacc = 0.0;

  friend bool operator==(const TrainLogEntry&, const TrainLogEntry&) = default;
};

struct TrainResult {
  GanModel model;  // checkpoint with the best validation G_acc
  std::vector<TrainLogEntry> log;
  double best_gacc = -1.0;
  std::size_t steps_run = 0;
  double first_triplet = std::numeric_limits<double>::quiet_NaN();
  double last_triplet = std::numeric_limits<double>::quiet_NaN();
};

// `per_class` generated samples for each of the given class columns.
inline Matrix generate_for_classes(const Generator& g, const Matrix& semantics, std::span<const int> classes,
                                   std::size_t per_class, Rng& rng, std::vector<int>* labels_out = nullptr) {
  const auto rows = static_cast<Eigen::Index>(classes.size() * per_class);
  Matrix sem(rows, semantics.cols());
  Eigen::Index r = 0;
  for (const int c : classes) {
    for (std::size_t i = 0; i < per_class; ++i, ++r) {
      sem.row(r) = semantics.row(c);
      if (labels_out) labels_out->push_back(c);
    }
  }
  return g.generate(sem, g.sample_noise(rows, rng));
}

// kNN vote scores of `queries` against generated references for `classes`.
// Columns follow the order of `classes`.
inline Matrix knn_scores(const Generator& g, const Matrix& semantics, std::span<const int> classes,
                         std::size_t per_class, std::size_t k, const Matrix& queries, Rng& rng) {
  std::vector<int> ref_labels;
  const Matrix refs = generate_for_classes(g, semantics, classes, per_class, rng, &ref_labels);
  std::map<int, int> column;
  for (std::size_t i = 0; i < classes.size(); ++i) column[classes[i]] = static_cast<int>(i);
  for (auto& y : ref_labels) y = column[y];
  const KnnClassifier knn(refs, std::move(ref_labels), std::min(k, static_cast<std::size_t>(refs.rows())),
                          classes.size());
  return knn.predict_proba(queries);
}

inline std::vector<int> all_columns(std::size_t n) {
  std::vector<int> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<int>(i);
  return v;
}

// Validation G_acc: kNN over generated features for every class, queried
// with real held-out seen features.
inline double validation_gacc(const Generator& g, const Matrix& semantics, std::size_t seen_count,
                              const Matrix& val_x, std::span<const int> val_y, const GanTrainConfig& cfg,
                              Rng& rng) {
  const auto classes = all_columns(static_cast<std::size_t>(semantics.rows()));
  const Matrix scores = knn_scores(g, semantics, classes, cfg.probe_per_class, cfg.knn_k, val_x, rng);
  return generalized_accuracy(scores, val_y, seen_count, cfg.sweep);
}

inline GanModel init_gan(const GeneratorConfig& gc, DiscriminatorConfig dc, std::vector<int> head_classes,
                         std::uint64_t seed) {
  Rng rng(seed);
  GanModel m;
  m.generator = Generator::make(gc, rng);
  dc.num_classes = static_cast<Eigen::Index>(head_classes.size());
  m.discriminator = Discriminator::make(dc, rng);
  m.head_classes = std::move(head_classes);
  return m;
}

struct TrainingStepLosses {
  double loss_d = 0.0;
  double loss_g = 0.0;
  double triplet = 0.0;
};

// Adversarial trainer over one training set. Holds the sampling tables
// and both optimizers.
class GanTrainer {
 public:
  GanTrainer(GanModel model, const TrainingSet& train, const Matrix& semantics, const GanTrainConfig& cfg,
             std::uint64_t seed)
      : model_(std::move(model)), train_(train), semantics_(semantics), cfg_(cfg), rng_(seed),
        adam_g_(cfg.adam), adam_d_(cfg.adam) {
    cfg_.validate();
    if (train_.size() == 0) throw ConfigError("training set is empty");
    if (train_.features.cols() != model_.generator.config.visual_dim) {
      throw ConfigError("training features have dimension " + std::to_string(train_.features.cols()) +
                        ", generator produces " + std::to_string(model_.generator.config.visual_dim));
    }
    for (std::size_t s = 0; s < model_.head_classes.size(); ++s) slot_[model_.head_classes[s]] = static_cast<int>(s);
    for (std::size_t i = 0; i < train_.size(); ++i) {
      const int y = train_.labels[i];
      if (!slot_.contains(y)) {
        throw ConfigError("training label " + std::to_string(y) + " has no classifier-head slot");
      }
      if (y < 0 || y >= semantics_.rows()) throw ConfigError("training label without semantic vector");
      rows_of_[y].push_back(i);
    }
    if (rows_of_.size() < 2) throw ConfigError("triplet sampling needs at least two training classes");
    for (const auto& [c, rows] : rows_of_) {
      auto& others = others_of_[c];
      for (std::size_t i = 0; i < train_.size(); ++i) {
        if (train_.labels[i] != c) others.push_back(i);
      }
    }
  }

  const GanModel& model() const { return model_; }

  TrainingStepLosses step() {
    TrainingStepLosses out;
    for (std::size_t k = 0; k < cfg_.n_d; ++k) out.loss_d = discriminator_step();
    const auto [lg, lt] = generator_step();
    out.loss_g = lg;
    out.triplet = lt;
    return out;
  }

 private:
  struct Batch {
    std::vector<std::size_t> rows;
    std::vector<int> classes;  // global columns
    std::vector<int> slots;    // classifier-head slots
    Matrix real;
    Matrix semantics;
  };

  Batch sample_batch() {
    Batch b;
    const std::size_t m = cfg_.batch_size;
    b.rows.resize(m);
    for (auto& r : b.rows) r = rng_.index(train_.size());
    b.real = gather_rows(train_.features, b.rows);
    b.semantics.resize(static_cast<Eigen::Index>(m), semantics_.cols());
    for (std::size_t i = 0; i < m; ++i) {
      const int c = train_.labels[b.rows[i]];
      b.classes.push_back(c);
      b.slots.push_back(slot_.at(c));
      b.semantics.row(static_cast<Eigen::Index>(i)) = semantics_.row(c);
    }
    return b;
  }

  double discriminator_step() {
    const Batch b = sample_batch();
    const Matrix fake = model_.generator.generate(b.semantics, model_.generator.sample_noise(b.real.rows(), rng_));
    Matrix interpolates(b.real.rows(), b.real.cols());
    for (Eigen::Index i = 0; i < b.real.rows(); ++i) {
      const double eps = rng_.uniform();
      interpolates.row(i) = eps * b.real.row(i) + (1.0 - eps) * fake.row(i);
    }
    auto loss = discriminator_loss(model_.discriminator, b.real, fake, b.slots, interpolates, cfg_.gp_weight);
    adam_d_.step(model_.discriminator.parameters(), gradient_spans(loss.grads));
    return loss.value;
  }

  std::pair<double, double> generator_step() {
    const Batch b = sample_batch();
    const auto m = static_cast<Eigen::Index>(b.rows.size());
    const Matrix noise = model_.generator.sample_noise(m, rng_);
    std::vector<Matrix> positives;
    std::vector<Matrix> negatives;
    positives.reserve(b.rows.size());
    negatives.reserve(b.rows.size());
    for (const int c : b.classes) {
      const auto& own = rows_of_.at(c);
      const auto& other = others_of_.at(c);
      std::vector<std::size_t> pick;
      for (const auto i : rng_.sample(own.size(), cfg_.n_pos)) pick.push_back(own[i]);
      positives.push_back(gather_rows(train_.features, pick));
      pick.clear();
      for (const auto i : rng_.sample(other.size(), cfg_.n_neg)) pick.push_back(other[i]);
      negatives.push_back(gather_rows(train_.features, pick));
    }
    auto obj = generator_objective(model_.generator, model_.discriminator, b.semantics, noise, b.real, b.slots,
                                   positives, negatives, cfg_.margin, cfg_.lambda_t, cfg_.critic_sign);
    adam_g_.step(model_.generator.parameters(), gradient_spans(obj.grads));
    return {obj.value, obj.triplet};
  }

  GanModel model_;
  const TrainingSet& train_;
  const Matrix& semantics_;
  GanTrainConfig cfg_;
  Rng rng_;
  AdamState adam_g_;
  AdamState adam_d_;
  std::map<int, int> slot_;
  std::map<int, std::vector<std::size_t>> rows_of_;
  std::map<int, std::vector<std::size_t>> others_of_;
};

// Runs up to n_step outer steps (n_d critic updates, one generator update
// each). Every eval_every steps, and after the final step, the generator is
// scored on the validation set; the best-scoring checkpoint is returned.
// Training stops once more than `patience` consecutive evaluations fail to
// improve. Without validation data the final parameters are returned.
inline TrainResult train_gan(const GanModel& init, const TrainingSet& train, const Matrix& val_x,
                             std::span<const int> val_y, const Matrix& semantics, std::size_t seen_count,
                             const GanTrainConfig& cfg, std::uint64_t seed,
                             const std::function<void(const TrainLogEntry&)>& on_eval = {}) {
  TrainResult result;
  result.model = init;
  if (cfg.n_step == 0) return result;

  GanTrainer trainer(init, train, semantics, cfg, derive_seed(seed, 1));
  Rng eval_rng(derive_seed(seed, 2));
  const bool validate = val_x.rows() > 0;
  std::size_t stale = 0;
  for (std::size_t step = 1; step <= cfg.n_step; ++step) {
    const auto losses = trainer.step();
    if (!std::isfinite(losses.loss_d)) throw NonFiniteError("discriminator loss", step);
    if (!std::isfinite(losses.loss_g)) throw NonFiniteError("generator loss", step);
    if (step == 1) result.first_triplet = losses.triplet;
    result.last_triplet = losses.triplet;
    result.steps_run = step;

    if (step % cfg.eval_every != 0 && step != cfg.n_step) continue;
    TrainLogEntry entry{step, losses.loss_d, losses.loss_g, losses.triplet, 0.0};
    if (validate) {
      entry.val_gacc = validation_gacc(trainer.model().generator, semantics, seen_count, val_x, val_y, cfg, eval_rng);
      if (entry.val_gacc > result.best_gacc) {
        result.best_gacc = entry.val_gacc;
        result.model = trainer.model();
        stale = 0;
      } else {
        ++stale;
      }
    } else {
      result.model = trainer.model();
    }
    result.log.push_back(entry);
    if (on_eval) on_eval(entry);
    if (validate && stale > cfg.patience) break;
  }
  if (!validate) result.model = trainer.model();
  return result;
}

}  // namespace gancst
