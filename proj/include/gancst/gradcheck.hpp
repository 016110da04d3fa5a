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

// Finite-difference verification of every hand-written backward pass on
// small random problems. Shared by the `grad-check` command and the tests.

#include <array>
#include <algorithm>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gancst/gan.hpp"
#include "gancst/nn.hpp"
#include "gancst/rng.hpp"

namespace gancst {

inline constexpr double kGradientTolerance = 1e-4;

struct GradientCase {
  std::string name;
  std::uint64_t seed = 0;
  GradientCheckResult result;

  bool passed(double tolerance = kGradientTolerance) const { return result.max_relative_error < tolerance; }
};

namespace detail {

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng, double scale = 1.0) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.normal(0.0, scale);
  return m;
}

inline Eigen::Index small_dim(Rng& rng, std::size_t lo, std::size_t hi) {
  return static_cast<Eigen::Index>(lo + rng.index(hi - lo + 1));
}

// Smallest |pre-activation| over every relu / leaky-relu unit of `mlp` on
// `x`; finite differences are only meaningful when this is not tiny.
inline double kink_distance(const Mlp& mlp, const Matrix& x) {
  const auto f = mlp_forward(mlp, x);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t l = 0; l < mlp.layers.size(); ++l) {
    const auto kind = mlp.layers[l].activation.kind;
    if (kind == ActivationKind::kRelu || kind == ActivationKind::kLeakyRelu) {
      best = std::min(best, f.cache.pre[l].cwiseAbs().minCoeff());
    }
  }
  return best;
}

// Margin that leaves the hinge active with a value in [0.5, 1.5). A large
// fixed margin would also do, but inflates the loss and with it the
// rounding noise of the finite differences.
inline double active_margin(const Matrix& anchors, const std::vector<Matrix>& pos, const std::vector<Matrix>& neg,
                            Rng& rng) {
  constexpr double kProbe = 100.0;
  const double inner = triplet_loss(anchors, pos, neg, kProbe).value - kProbe;
  return std::max(0.0, -inner) + 0.5 + rng.uniform();
}

inline constexpr double kKinkClearance = 1e-3;
inline constexpr int kMaxDraws = 1000;

inline std::vector<int> random_labels(std::size_t n, std::size_t classes, Rng& rng) {
  std::vector<int> y(n);
  for (auto& v : y) v = static_cast<int>(rng.index(classes));
  return y;
}

}  // namespace detail

// Random 2-3 layer MLP with mixed activations; loss = sum(R .* f(X)).
// Checks parameter and input gradients.
inline GradientCase check_mlp_gradients(std::uint64_t seed) {
  Rng rng(seed);
  const Eigen::Index in = detail::small_dim(rng, 2, 6);
  const std::array<Activation, 4> pool{Activation::identity(), Activation::relu(), Activation::leaky_relu(0.2),
                                       Activation::tanh()};
  std::vector<LayerSpec> specs;
  const std::size_t depth = 2 + rng.index(2);
  for (std::size_t l = 0; l < depth; ++l) specs.push_back({detail::small_dim(rng, 2, 6), pool[rng.index(pool.size())]});
  Mlp mlp = Mlp::make(in, specs, rng);
  for (auto& layer : mlp.layers) {
    for (Eigen::Index i = 0; i < layer.bias.size(); ++i) layer.bias[i] = rng.normal(0.0, 0.3);
  }
  const Eigen::Index rows = detail::small_dim(rng, 1, 5);
  Matrix x = detail::random_matrix(rows, in, rng);
  for (int draw = 0; detail::kink_distance(mlp, x) <= detail::kKinkClearance; ++draw) {
    if (draw == detail::kMaxDraws) throw UsageError("could not draw an MLP input away from activation kinks");
    x = detail::random_matrix(rows, in, rng);
  }
  const Matrix r = detail::random_matrix(x.rows(), mlp.output_dim(), rng);

  auto loss = [&] { return mlp_apply(mlp, x).cwiseProduct(r).sum(); };
  const auto f = mlp_forward(mlp, x);
  auto grads = mlp_backward(mlp, f.cache, r);
  ParamSpans params = parameter_spans(mlp);
  params.emplace_back(x.data(), static_cast<std::size_t>(x.size()));
  ParamSpans analytic = gradient_spans(grads);
  analytic.emplace_back(grads.input.data(), static_cast<std::size_t>(grads.input.size()));
  return {"mlp_backward", seed, gradient_check(params, analytic, loss)};
}

// Anchors are the free variables; the hinge is kept active. One-dimensional
// instances are avoided: there the unit-vector terms can cancel exactly and
// the check would compare a true zero against rounding noise.
inline GradientCase check_triplet_gradients(std::uint64_t seed) {
  Rng rng(seed);
  const auto c = static_cast<std::size_t>(detail::small_dim(rng, 1, 4));
  const Eigen::Index dim = detail::small_dim(rng, 2, 8);
  Matrix anchors = detail::random_matrix(static_cast<Eigen::Index>(c), dim, rng);
  std::vector<Matrix> pos, neg;
  for (std::size_t i = 0; i < c; ++i) {
    pos.push_back(detail::random_matrix(detail::small_dim(rng, 1, 5), dim, rng));
    neg.push_back(detail::random_matrix(detail::small_dim(rng, 1, 5), dim, rng));
  }
  const double margin = detail::active_margin(anchors, pos, neg, rng);
  auto loss = [&] { return triplet_loss(anchors, pos, neg, margin).value; };
  auto r = triplet_loss(anchors, pos, neg, margin);
  ParamSpans params{{anchors.data(), static_cast<std::size_t>(anchors.size())}};
  ParamSpans analytic{{r.d_anchors.data(), static_cast<std::size_t>(r.d_anchors.size())}};
  return {"triplet_loss", seed, gradient_check(params, analytic, loss)};
}

struct TinyGan {
  Generator generator;
  Discriminator discriminator;
  Matrix semantics;
  Matrix noise;
  Matrix real;
  Matrix fake;
  Matrix interpolates;
  std::vector<int> slots;
  std::vector<Matrix> positives;
  std::vector<Matrix> negatives;
};

inline TinyGan make_tiny_gan(Rng& rng, NoiseMode mode = NoiseMode::kAdditive) {
  TinyGan t;
  GeneratorConfig gc;
  gc.semantic_dim = detail::small_dim(rng, 2, 5);
  gc.reduce_dim = detail::small_dim(rng, 2, 4);
  gc.noise_dim = mode == NoiseMode::kAdditive ? 0 : detail::small_dim(rng, 1, 3);
  gc.noise_mode = mode;
  gc.hidden_dim = detail::small_dim(rng, 3, 6);
  gc.visual_dim = detail::small_dim(rng, 2, 5);
  gc.noise_sigma = 0.5;
  t.generator = Generator::make(gc, rng);
  DiscriminatorConfig dc;
  dc.visual_dim = gc.visual_dim;
  dc.hidden_dim = detail::small_dim(rng, 3, 6);
  dc.num_classes = detail::small_dim(rng, 2, 4);
  t.discriminator = Discriminator::make(dc, rng);
  const Eigen::Index m = detail::small_dim(rng, 2, 5);
  for (int draw = 0;; ++draw) {
    if (draw == detail::kMaxDraws) throw UsageError("could not draw a GAN batch away from activation kinks");
    t.semantics = detail::random_matrix(m, gc.semantic_dim, rng);
    t.noise = t.generator.sample_noise(m, rng);
    t.real = detail::random_matrix(m, gc.visual_dim, rng, 0.5);
    t.fake = detail::random_matrix(m, gc.visual_dim, rng, 0.5);
    t.interpolates = detail::random_matrix(m, gc.visual_dim, rng, 0.5);
    const auto gf = t.generator.forward(t.semantics, t.noise);
    const Matrix body_in = gf.body.inputs.front();
    double clearance = detail::kink_distance(t.generator.body, body_in);
    for (const Matrix* x : std::array<const Matrix*, 4>{&t.real, &t.fake, &t.interpolates, &gf.output}) {
      clearance = std::min(clearance, detail::kink_distance(t.discriminator.trunk, *x));
    }
    if (clearance > detail::kKinkClearance) break;
  }
  t.slots = detail::random_labels(static_cast<std::size_t>(m), static_cast<std::size_t>(dc.num_classes), rng);
  for (Eigen::Index i = 0; i < m; ++i) {
    t.positives.push_back(detail::random_matrix(detail::small_dim(rng, 1, 3), gc.visual_dim, rng, 0.5));
    t.negatives.push_back(detail::random_matrix(detail::small_dim(rng, 1, 3), gc.visual_dim, rng, 0.5));
  }
  return t;
}

// Full generator objective (critic, both CE terms, triplet) with respect to
// the generator parameters.
inline GradientCase check_generator_loss_gradients(std::uint64_t seed, CriticSign sign = CriticSign::kAdversarial) {
  Rng rng(seed);
  auto t = make_tiny_gan(rng, seed % 2 == 0 ? NoiseMode::kAdditive : NoiseMode::kConcat);
  const double margin =
      detail::active_margin(t.generator.generate(t.semantics, t.noise), t.positives, t.negatives, rng);
  const double lambda_t = 0.5 + rng.uniform();
  auto eval = [&] {
    return generator_objective(t.generator, t.discriminator, t.semantics, t.noise, t.real, t.slots, t.positives,
                               t.negatives, margin, lambda_t, sign);
  };
  auto obj = eval();
  return {"generator_loss", seed,
          gradient_check(t.generator.parameters(), gradient_spans(obj.grads), [&] { return eval().value; })};
}

// Critic loss with respect to the discriminator parameters. The critic
// bias cancels between the real and fake means, so its derivative is
// identically zero and a finite difference on it measures only rounding
// noise; it is required to be exactly zero instead and left out of the
// finite-difference comparison.
inline GradientCase check_discriminator_loss_gradients(std::uint64_t seed, double gp_weight = 0.0) {
  Rng rng(seed);
  auto t = make_tiny_gan(rng);
  auto eval = [&] {
    return discriminator_loss(t.discriminator, t.real, t.fake, t.slots, t.interpolates, gp_weight);
  };
  auto r = eval();
  auto params = t.discriminator.parameters();
  auto analytic = gradient_spans(r.grads);
  constexpr std::size_t kCriticBias = 3;  // trunk W, trunk b, critic W, critic b, ...
  const double bias_grad = analytic[kCriticBias][0];
  params.erase(params.begin() + kCriticBias);
  analytic.erase(analytic.begin() + kCriticBias);
  GradientCase out{gp_weight == 0.0 ? "discriminator_loss" : "discriminator_loss_gp", seed,
                   gradient_check(params, analytic, [&] { return eval().value; })};
  if (bias_grad != 0.0) {
    out.result.max_relative_error = std::numeric_limits<double>::infinity();
    out.result.analytic = bias_grad;
    out.result.numeric = 0.0;
  }
  return out;
}

// All four checks for each seed in [first_seed, first_seed + count).
inline std::vector<GradientCase> run_gradient_suite(std::uint64_t first_seed, std::size_t count) {
  std::vector<GradientCase> out;
  for (std::uint64_t s = first_seed; s < first_seed + count; ++s) {
    out.push_back(check_mlp_gradients(s));
    out.push_back(check_triplet_gradients(s));
    out.push_back(check_generator_loss_gradients(s));
    out.push_back(check_discriminator_loss_gradients(s));
  }
  return out;
}

}  // namespace gancst
