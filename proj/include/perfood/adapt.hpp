// Copyright 2026 The perfood Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Trainable feature adapter.
//
//   z = W2 * act(GroupNorm(W1 * f + b1)) + b2,     p = P * z
//
// The group norm carries no affine parameters. Gradients of both
// self-supervised objectives are derived by hand; stop-gradient in the
// SimSiam objective is realized by treating the target embedding as a
// constant in each cosine term.

#pragma once

#include <array>
#include <span>
#include <utility>
#include <string_view>

#include "perfood/core.hpp"
#include "perfood/replay.hpp"

namespace perfood {

inline constexpr double kGroupNormEps = 1e-5;

enum class Activation { Relu, Identity };
enum class LossKind { SimSiam, Barlow };

std::string_view to_string(Activation a);
std::string_view to_string(LossKind l);
Activation parse_activation(std::string_view s);
LossKind parse_loss(std::string_view s);

struct AdapterParams {
  Mat w1;
  Vec b1;
  Mat w2;
  Vec b2;
  Mat pred;  // SimSiam predictor head
  int groups = 8;
  Activation activation = Activation::Relu;
  bool residual = false;  // z = f + W2 act(GN(W1 f + b1)) + b2

  /// Identity plus N(0, sigma^2) entries for W1, W2 and P; zero biases. With
  /// a residual path W2 starts at N(0, sigma^2) alone, so z is close to f.
  static AdapterParams near_identity(Eigen::Index dim, int groups, Rng& rng, double sigma = 0.01,
                                     Activation activation = Activation::Relu, bool residual = false);
  static AdapterParams zeros(Eigen::Index dim, int groups, Activation activation = Activation::Relu,
                             bool residual = false);
  AdapterParams zeros_like() const { return zeros(dim(), groups, activation, residual); }

  Eigen::Index dim() const { return w1.rows(); }
  void validate() const;
  bool all_finite() const;
  double squared_norm() const;

  // Flat views over (w1, b1, w2, b2, pred), in that order.
  std::array<std::span<double>, 5> tensors();
  std::array<std::span<const double>, 5> tensors() const;
  std::size_t num_scalars() const;
};

struct OptimConfig {
  double learning_rate = 1e-3;
  double weight_decay = 1e-4;
  LossKind loss = LossKind::SimSiam;
  double barlow_lambda = 0.005;

  void validate() const;
};

/// Splits v into `groups` contiguous groups and standardizes each:
/// (x - mean) / sqrt(var + eps), population variance.
Vec group_normalize(const Eigen::Ref<const Vec>& v, int groups, double eps = kGroupNormEps);

Vec forward(const AdapterParams& params, const Eigen::Ref<const Vec>& f);
/// Column-wise forward over a d x n matrix of features.
Mat forward_columns(const AdapterParams& params, const Mat& features);

struct LossAndGrads {
  double loss = 0.0;
  AdapterParams grads;
};

/// Mean over pairs of -1/2 [cos(P z1, sg(z2)) + cos(P z2, sg(z1))], plus
/// weight_decay/2 * |theta|^2. Throws NumericalError on zero-norm embeddings.
LossAndGrads simsiam_loss_and_grads(const AdapterParams& params, std::span<const FeaturePair> batch,
                                    double weight_decay = 0.0);

/// Encoder outputs (z1, z2) of both views, d x n each.
std::pair<Mat, Mat> simsiam_targets(const AdapterParams& params, std::span<const FeaturePair> batch);

/// The same objective with the stop-gradient targets passed in explicitly, so
/// the loss is a differentiable function of params alone (view 1 predictions
/// are compared with target2, view 2 with target1).
LossAndGrads simsiam_loss_with_targets(const AdapterParams& params, std::span<const FeaturePair> batch,
                                       const Mat& target1, const Mat& target2, double weight_decay = 0.0);

/// Embeddings standardized per dimension across the batch, C = Z1^T Z2 / n,
/// loss = sum_i (1 - C_ii)^2 + lambda * sum_{i != j} C_ij^2, plus
/// weight_decay/2 * |theta|^2. Needs at least two pairs.
LossAndGrads barlow_loss_and_grads(const AdapterParams& params, std::span<const FeaturePair> batch,
                                   double lambda, double weight_decay = 0.0);

LossAndGrads loss_and_grads(const AdapterParams& params, std::span<const FeaturePair> batch,
                            const OptimConfig& config, double weight_decay = 0.0);

/// theta <- theta - lr * (grad + weight_decay * theta). Refuses non-finite gradients.
void sgd_step(AdapterParams& params, const AdapterParams& grads, const OptimConfig& config);

}  // namespace perfood
