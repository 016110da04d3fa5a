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

// Dense MLP substrate: row-batch matrices, forward/backward through a fixed
// stack of fully connected layers, Glorot initialization, Adam, and a
// central-difference gradient checker.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "gancst/error.hpp"
#include "gancst/rng.hpp"

namespace gancst {

// Rows are samples. Row-major so a sample is contiguous in memory.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

inline bool all_finite(const Matrix& m) { return m.allFinite(); }

enum class ActivationKind { kIdentity, kRelu, kLeakyRelu, kTanh };

struct Activation {
  ActivationKind kind = ActivationKind::kIdentity;
  double slope = 0.2;  // leaky_relu only

  static Activation identity() { return {ActivationKind::kIdentity, 0.0}; }
  static Activation relu() { return {ActivationKind::kRelu, 0.0}; }
  static Activation leaky_relu(double slope = 0.2) { return {ActivationKind::kLeakyRelu, slope}; }
  static Activation tanh() { return {ActivationKind::kTanh, 0.0}; }

  friend bool operator==(const Activation&, const Activation&) = default;
};

inline std::string to_string(const Activation& a) {
  switch (a.kind) {
    case ActivationKind::kIdentity: return "identity";
    case ActivationKind::kRelu: return "relu";
    case ActivationKind::kLeakyRelu: return "leaky_relu";
    case ActivationKind::kTanh: return "tanh";
  }
  return "identity";
}

inline Activation activation_from_string(const std::string& name, double slope = 0.2) {
  if (name == "identity") return Activation::identity();
  if (name == "relu") return Activation::relu();
  if (name == "leaky_relu") return Activation::leaky_relu(slope);
  if (name == "tanh") return Activation::tanh();
  throw ConfigError("unknown activation '" + name + "'");
}

inline Matrix activate(const Activation& a, const Matrix& pre) {
  switch (a.kind) {
    case ActivationKind::kIdentity: return pre;
    case ActivationKind::kRelu: return pre.cwiseMax(0.0);
    case ActivationKind::kLeakyRelu: {
      const double s = a.slope;
      return pre.unaryExpr([s](double v) { return v > 0.0 ? v : s * v; });
    }
    case ActivationKind::kTanh: return pre.array().tanh().matrix();
  }
  return pre;
}

// Elementwise derivative of the activation evaluated at the pre-activation.
inline Matrix activation_slope(const Activation& a, const Matrix& pre) {
  switch (a.kind) {
    case ActivationKind::kIdentity: return Matrix::Ones(pre.rows(), pre.cols());
    case ActivationKind::kRelu:
      return pre.unaryExpr([](double v) { return v > 0.0 ? 1.0 : 0.0; });
    case ActivationKind::kLeakyRelu: {
      const double s = a.slope;
      return pre.unaryExpr([s](double v) { return v > 0.0 ? 1.0 : s; });
    }
    case ActivationKind::kTanh:
      return pre.unaryExpr([](double v) {
        const double t = std::tanh(v);
        return 1.0 - t * t;
      });
  }
  return Matrix::Ones(pre.rows(), pre.cols());
}

// y = x * weight + bias, weight stored (fan_in x fan_out).
struct DenseLayer {
  Matrix weight;
  Vector bias;
  Activation activation;

  Eigen::Index fan_in() const { return weight.rows(); }
  Eigen::Index fan_out() const { return weight.cols(); }
};

struct LayerSpec {
  Eigen::Index fan_out;
  Activation activation;
};

// Glorot-uniform weights, zero biases.
inline DenseLayer make_dense(Eigen::Index fan_in, Eigen::Index fan_out, Activation activation,
                             Rng& rng) {
  if (fan_in < 1 || fan_out < 1) throw ConfigError("layer dimensions must be >= 1");
  DenseLayer layer;
  layer.weight.resize(fan_in, fan_out);
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  for (Eigen::Index r = 0; r < fan_in; ++r) {
    for (Eigen::Index c = 0; c < fan_out; ++c) layer.weight(r, c) = rng.uniform(-limit, limit);
  }
  layer.bias = Vector::Zero(fan_out);
  layer.activation = activation;
  return layer;
}

struct Mlp {
  std::vector<DenseLayer> layers;

  Mlp() = default;
  explicit Mlp(std::vector<DenseLayer> l) : layers(std::move(l)) { validate(); }

  static Mlp make(Eigen::Index input_dim, std::span<const LayerSpec> specs, Rng& rng) {
    Mlp mlp;
    Eigen::Index in = input_dim;
    for (const auto& spec : specs) {
      mlp.layers.push_back(make_dense(in, spec.fan_out, spec.activation, rng));
      in = spec.fan_out;
    }
    mlp.validate();
    return mlp;
  }

  Eigen::Index input_dim() const { return layers.empty() ? 0 : layers.front().fan_in(); }
  Eigen::Index output_dim() const { return layers.empty() ? 0 : layers.back().fan_out(); }

  std::size_t parameter_count() const {
    std::size_t n = 0;
    for (const auto& l : layers) n += static_cast<std::size_t>(l.weight.size() + l.bias.size());
    return n;
  }

  void validate() const {
    if (layers.empty()) throw ConfigError("MLP needs at least one layer");
    for (std::size_t i = 0; i < layers.size(); ++i) {
      const auto& l = layers[i];
      if (l.bias.size() != l.fan_out()) throw ConfigError("bias size does not match layer width");
      if (i > 0 && layers[i - 1].fan_out() != l.fan_in()) {
        throw ConfigError("layer " + std::to_string(i) + " input width does not match previous output");
      }
    }
  }

  friend bool operator==(const Mlp& a, const Mlp& b) {
    if (a.layers.size() != b.layers.size()) return false;
    for (std::size_t i = 0; i < a.layers.size(); ++i) {
      const auto& x = a.layers[i];
      const auto& y = b.layers[i];
      if (!(x.activation == y.activation) || x.weight.rows() != y.weight.rows() ||
          x.weight.cols() != y.weight.cols() || x.weight != y.weight || x.bias != y.bias) {
        return false;
      }
    }
    return true;
  }
};

// Per-layer inputs and pre-activations recorded by the forward pass.
struct ForwardCache {
  std::vector<Matrix> inputs;
  std::vector<Matrix> pre;
};

struct ForwardResult {
  Matrix output;
  ForwardCache cache;
};

// With `column_stable`, every output column is its own matrix-vector product,
// so a unit's output does not depend on how many units share its layer
// (a blocked matrix product may sum in a width-dependent order).
inline ForwardResult mlp_forward(const Mlp& mlp, const Matrix& input, bool column_stable = false) {
  if (mlp.layers.empty()) throw ConfigError("forward through an empty MLP");
  if (input.cols() != mlp.input_dim()) {
    throw ConfigError("input has " + std::to_string(input.cols()) + " columns, network expects " +
                      std::to_string(mlp.input_dim()));
  }
  ForwardResult result;
  result.cache.inputs.reserve(mlp.layers.size());
  result.cache.pre.reserve(mlp.layers.size());
  Matrix current = input;
  for (const auto& layer : mlp.layers) {
    Matrix pre(current.rows(), layer.fan_out());
    if (column_stable) {
      for (Eigen::Index c = 0; c < pre.cols(); ++c) {
        const Vector w = layer.weight.col(c);
        pre.col(c).noalias() = current * w;
      }
    } else {
      pre.noalias() = current * layer.weight;
    }
    pre.rowwise() += layer.bias.transpose();
    result.cache.inputs.push_back(std::move(current));
    current = activate(layer.activation, pre);
    result.cache.pre.push_back(std::move(pre));
  }
  result.output = std::move(current);
  return result;
}

// Forward without keeping the cache.
inline Matrix mlp_apply(const Mlp& mlp, const Matrix& input) {
  return mlp_forward(mlp, input).output;
}

struct MlpGradients {
  std::vector<Matrix> weight;
  std::vector<Vector> bias;
  Matrix input;

  static MlpGradients zeros_like(const Mlp& mlp) {
    MlpGradients g;
    for (const auto& l : mlp.layers) {
      g.weight.push_back(Matrix::Zero(l.weight.rows(), l.weight.cols()));
      g.bias.push_back(Vector::Zero(l.bias.size()));
    }
    return g;
  }

  MlpGradients& operator+=(const MlpGradients& other) {
    if (weight.size() != other.weight.size()) throw UsageError("gradient layer count mismatch");
    for (std::size_t i = 0; i < weight.size(); ++i) {
      weight[i] += other.weight[i];
      bias[i] += other.bias[i];
    }
    return *this;
  }

  MlpGradients& operator*=(double s) {
    for (auto& w : weight) w *= s;
    for (auto& b : bias) b *= s;
    input *= s;
    return *this;
  }
};

inline MlpGradients mlp_backward(const Mlp& mlp, const ForwardCache& cache, const Matrix& upstream) {
  const std::size_t n = mlp.layers.size();
  if (cache.inputs.size() != n || cache.pre.size() != n) {
    throw UsageError("forward cache does not belong to this network");
  }
  for (std::size_t i = 0; i < n; ++i) {
    const auto& l = mlp.layers[i];
    if (cache.inputs[i].cols() != l.fan_in() || cache.pre[i].cols() != l.fan_out() ||
        cache.pre[i].rows() != cache.inputs[i].rows()) {
      throw UsageError("forward cache shape does not match layer " + std::to_string(i));
    }
  }
  if (upstream.rows() != cache.pre.back().rows() || upstream.cols() != mlp.output_dim()) {
    throw UsageError("upstream gradient shape does not match the cached forward pass");
  }

  MlpGradients grads;
  grads.weight.resize(n);
  grads.bias.resize(n);
  Matrix delta = upstream;
  for (std::size_t k = n; k-- > 0;) {
    const auto& layer = mlp.layers[k];
    delta = delta.cwiseProduct(activation_slope(layer.activation, cache.pre[k]));
    grads.weight[k] = cache.inputs[k].transpose() * delta;
    grads.bias[k] = delta.colwise().sum().transpose();
    delta = delta * layer.weight.transpose();
  }
  grads.input = std::move(delta);
  return grads;
}

// Flat views over parameters and gradients so optimizers and the gradient
// checker can treat several networks as one parameter list.
using ParamSpans = std::vector<std::span<double>>;

inline void append_spans(ParamSpans& out, Mlp& mlp) {
  for (auto& l : mlp.layers) {
    out.emplace_back(l.weight.data(), static_cast<std::size_t>(l.weight.size()));
    out.emplace_back(l.bias.data(), static_cast<std::size_t>(l.bias.size()));
  }
}

inline void append_spans(ParamSpans& out, MlpGradients& g) {
  for (std::size_t i = 0; i < g.weight.size(); ++i) {
    out.emplace_back(g.weight[i].data(), static_cast<std::size_t>(g.weight[i].size()));
    out.emplace_back(g.bias[i].data(), static_cast<std::size_t>(g.bias[i].size()));
  }
}

inline ParamSpans parameter_spans(Mlp& mlp) {
  ParamSpans s;
  append_spans(s, mlp);
  return s;
}

inline ParamSpans gradient_spans(MlpGradients& g) {
  ParamSpans s;
  append_spans(s, g);
  return s;
}

struct AdamConfig {
  double alpha = 0.001;
  double beta1 = 0.5;
  double beta2 = 0.9;
  double epsilon = 1e-8;
};

class AdamState {
 public:
  AdamState() = default;
  explicit AdamState(AdamConfig config) : config_(config) {
    if (config.beta1 < 0.0 || config.beta1 >= 1.0 || config.beta2 < 0.0 || config.beta2 >= 1.0) {
      throw ConfigError("Adam decay rates must lie in [0, 1)");
    }
  }

  std::size_t step_count() const { return t_; }
  const AdamConfig& config() const { return config_; }

  // Moments are allocated lazily on the first step and shape-checked after.
  void step(const ParamSpans& params, const ParamSpans& grads) {
    if (params.size() != grads.size()) throw UsageError("Adam: parameter/gradient group mismatch");
    if (m_.empty()) {
      for (const auto& p : params) {
        m_.emplace_back(p.size(), 0.0);
        v_.emplace_back(p.size(), 0.0);
      }
    }
    if (m_.size() != params.size()) throw UsageError("Adam: parameter groups changed between steps");
    for (std::size_t g = 0; g < params.size(); ++g) {
      if (params[g].size() != grads[g].size() || params[g].size() != m_[g].size()) {
        throw UsageError("Adam: shape mismatch in parameter group " + std::to_string(g));
      }
    }
    ++t_;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t g = 0; g < params.size(); ++g) {
      auto& m = m_[g];
      auto& v = v_[g];
      auto p = params[g];
      const auto grad = grads[g];
      for (std::size_t i = 0; i < p.size(); ++i) {
        m[i] = b1 * m[i] + (1.0 - b1) * grad[i];
        v[i] = b2 * v[i] + (1.0 - b2) * grad[i] * grad[i];
        const double m_hat = m[i] / c1;
        const double v_hat = v[i] / c2;
        p[i] -= config_.alpha * m_hat / (std::sqrt(v_hat) + config_.epsilon);
      }
    }
  }

 private:
  AdamConfig config_;
  std::size_t t_ = 0;
  std::vector<std::vector<double>> m_;
  std::vector<std::vector<double>> v_;
};

inline void adam_step(Mlp& mlp, MlpGradients& grads, AdamState& state) {
  state.step(parameter_spans(mlp), gradient_spans(grads));
}

struct GradientCheckResult {
  double max_relative_error = 0.0;
  std::size_t worst_group = 0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

// Central differences on every parameter; `loss` is re-evaluated with the
// perturbed parameter and must be deterministic. Parameters are restored.
inline GradientCheckResult gradient_check(const ParamSpans& params, const ParamSpans& analytic,
                                          const std::function<double()>& loss,
                                          double step = 1e-5) {
  if (params.size() != analytic.size()) throw UsageError("gradient_check: group count mismatch");
  GradientCheckResult result;
  for (std::size_t g = 0; g < params.size(); ++g) {
    if (params[g].size() != analytic[g].size()) throw UsageError("gradient_check: shape mismatch");
    for (std::size_t i = 0; i < params[g].size(); ++i) {
      double& p = params[g][i];
      const double saved = p;
      p = saved + step;
      const double up = loss();
      p = saved - step;
      const double down = loss();
      p = saved;
      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[g][i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
      const double err = std::abs(a - numeric) / denom;
      if (err > result.max_relative_error) {
        result = {err, g, i, a, numeric};
      }
    }
  }
  return result;
}

// Stacks the given rows of `source` into a new matrix.
inline Matrix gather_rows(const Matrix& source, std::span<const std::size_t> rows) {
  Matrix out(static_cast<Eigen::Index>(rows.size()), source.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = source.row(static_cast<Eigen::Index>(rows[i]));
  }
  return out;
}

}  // namespace gancst
