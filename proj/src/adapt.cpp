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

#include "perfood/adapt.hpp"

#include <cmath>

namespace perfood {

namespace {

constexpr double kMinNorm = 1e-12;

struct BatchTrace {
  Mat input;    // d x n
  Mat normed;   // group-normalized pre-activations
  Mat act;      // after nonlinearity
  Mat out;      // z
  Mat inv_std;  // groups x n
};

void normalize_groups(Eigen::Ref<Mat> x, int groups, double eps, Eigen::Ref<Mat> inv_std) {
  const Eigen::Index gs = x.rows() / groups;
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    for (int g = 0; g < groups; ++g) {
      auto seg = x.col(c).segment(g * gs, gs);
      const double mean = seg.mean();
      seg.array() -= mean;
      const double var = seg.squaredNorm() / static_cast<double>(gs);
      const double inv = 1.0 / std::sqrt(var + eps);
      seg *= inv;
      inv_std(g, c) = inv;
    }
  }
}

// Backward of the standardization y = (x - mean) / sqrt(var + eps) over each
// segment: dx = inv * (dy - mean(dy) - y * mean(dy * y)).
void normalize_groups_backward(const Mat& y, const Mat& inv_std, int groups, Mat& dy) {
  const Eigen::Index gs = y.rows() / groups;
  const double n = static_cast<double>(gs);
  for (Eigen::Index c = 0; c < y.cols(); ++c) {
    for (int g = 0; g < groups; ++g) {
      auto d = dy.col(c).segment(g * gs, gs);
      const auto yy = y.col(c).segment(g * gs, gs);
      const double mean_d = d.sum() / n;
      const double mean_dy = d.dot(yy) / n;
      d = inv_std(g, c) * (d.array() - mean_d - yy.array() * mean_dy).matrix();
    }
  }
}

void check_dims(const AdapterParams& p, Eigen::Index rows) {
  if (rows != p.dim())
    throw UsageError("adapter: feature dimension " + std::to_string(rows) + " does not match adapter dimension " +
                     std::to_string(p.dim()));
}

BatchTrace forward_trace(const AdapterParams& p, Mat input) {
  check_dims(p, input.rows());
  BatchTrace t;
  t.input = std::move(input);
  t.normed = p.w1 * t.input;
  t.normed.colwise() += p.b1;
  t.inv_std.resize(p.groups, t.input.cols());
  normalize_groups(t.normed, p.groups, kGroupNormEps, t.inv_std);
  t.act = p.activation == Activation::Relu ? Mat(t.normed.cwiseMax(0.0)) : t.normed;
  t.out = p.w2 * t.act;
  t.out.colwise() += p.b2;
  if (p.residual) t.out += t.input;
  return t;
}

// Accumulates parameter gradients given dL/dz for every column of the trace.
void backward_trace(const AdapterParams& p, const BatchTrace& t, const Mat& dz, AdapterParams& g) {
  g.w2.noalias() += dz * t.act.transpose();
  g.b2 += dz.rowwise().sum();
  Mat dh = p.w2.transpose() * dz;
  if (p.activation == Activation::Relu) dh = (t.normed.array() > 0.0).select(dh, 0.0);
  normalize_groups_backward(t.normed, t.inv_std, p.groups, dh);
  g.w1.noalias() += dh * t.input.transpose();
  g.b1 += dh.rowwise().sum();
}

Mat stack(std::span<const FeaturePair> batch, bool first) {
  const Eigen::Index d = (first ? batch.front().first : batch.front().second).size();
  Mat m(d, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t i = 0; i < batch.size(); ++i) {
    const Vec& f = first ? batch[i].first : batch[i].second;
    if (f.size() != d) throw UsageError("adapter: inconsistent feature dimensions in batch");
    m.col(static_cast<Eigen::Index>(i)) = f;
  }
  return m;
}

void add_weight_decay(const AdapterParams& p, double wd, LossAndGrads& out) {
  if (wd == 0.0) return;
  out.loss += 0.5 * wd * p.squared_norm();
  out.grads.w1 += wd * p.w1;
  out.grads.b1 += wd * p.b1;
  out.grads.w2 += wd * p.w2;
  out.grads.b2 += wd * p.b2;
  out.grads.pred += wd * p.pred;
}

}  // namespace

std::string_view to_string(Activation a) { return a == Activation::Relu ? "relu" : "identity"; }
std::string_view to_string(LossKind l) { return l == LossKind::SimSiam ? "simsiam" : "barlow"; }

Activation parse_activation(std::string_view s) {
  if (s == "relu") return Activation::Relu;
  if (s == "identity" || s == "linear") return Activation::Identity;
  throw UsageError("unknown activation '" + std::string(s) + "'");
}

LossKind parse_loss(std::string_view s) {
  if (s == "simsiam" || s == "SIMSIAM") return LossKind::SimSiam;
  if (s == "barlow" || s == "BARLOW") return LossKind::Barlow;
  throw UsageError("unknown loss '" + std::string(s) + "' (expected simsiam or barlow)");
}

AdapterParams AdapterParams::zeros(Eigen::Index dim, int groups, Activation activation, bool residual) {
  AdapterParams p;
  p.w1 = Mat::Zero(dim, dim);
  p.b1 = Vec::Zero(dim);
  p.w2 = Mat::Zero(dim, dim);
  p.b2 = Vec::Zero(dim);
  p.pred = Mat::Zero(dim, dim);
  p.groups = groups;
  p.activation = activation;
  p.residual = residual;
  return p;
}

AdapterParams AdapterParams::near_identity(Eigen::Index dim, int groups, Rng& rng, double sigma,
                                           Activation activation, bool residual) {
  AdapterParams p = zeros(dim, groups, activation, residual);
  p.validate();
  std::normal_distribution<double> normal(0.0, sigma);
  for (Mat* m : {&p.w1, &p.w2, &p.pred}) {
    const double diag = residual && m == &p.w2 ? 0.0 : 1.0;
    for (Eigen::Index j = 0; j < dim; ++j)
      for (Eigen::Index i = 0; i < dim; ++i) (*m)(i, j) = (i == j ? diag : 0.0) + (sigma > 0.0 ? normal(rng) : 0.0);
  }
  return p;
}

void AdapterParams::validate() const {
  const Eigen::Index d = dim();
  if (d < 1) throw UsageError("adapter: dimension must be >= 1");
  if (groups < 1 || d % groups != 0)
    throw UsageError("adapter: dimension " + std::to_string(d) + " not divisible by group count " +
                     std::to_string(groups));
  if (w1.cols() != d || b1.size() != d || w2.rows() != d || w2.cols() != d || b2.size() != d ||
      pred.rows() != d || pred.cols() != d)
    throw UsageError("adapter: inconsistent parameter shapes");
  if (!all_finite()) throw NumericalError("adapter: non-finite parameters");
}

bool AdapterParams::all_finite() const {
  return w1.allFinite() && b1.allFinite() && w2.allFinite() && b2.allFinite() && pred.allFinite();
}

double AdapterParams::squared_norm() const {
  return w1.squaredNorm() + b1.squaredNorm() + w2.squaredNorm() + b2.squaredNorm() + pred.squaredNorm();
}

std::array<std::span<double>, 5> AdapterParams::tensors() {
  return {std::span<double>(w1.data(), static_cast<std::size_t>(w1.size())),
          std::span<double>(b1.data(), static_cast<std::size_t>(b1.size())),
          std::span<double>(w2.data(), static_cast<std::size_t>(w2.size())),
          std::span<double>(b2.data(), static_cast<std::size_t>(b2.size())),
          std::span<double>(pred.data(), static_cast<std::size_t>(pred.size()))};
}

std::array<std::span<const double>, 5> AdapterParams::tensors() const {
  return {std::span<const double>(w1.data(), static_cast<std::size_t>(w1.size())),
          std::span<const double>(b1.data(), static_cast<std::size_t>(b1.size())),
          std::span<const double>(w2.data(), static_cast<std::size_t>(w2.size())),
          std::span<const double>(b2.data(), static_cast<std::size_t>(b2.size())),
          std::span<const double>(pred.data(), static_cast<std::size_t>(pred.size()))};
}

std::size_t AdapterParams::num_scalars() const {
  std::size_t n = 0;
  for (auto t : tensors()) n += t.size();
  return n;
}

void OptimConfig::validate() const {
  if (!(learning_rate > 0.0)) throw UsageError("learning_rate must be > 0");
  if (!(weight_decay >= 0.0)) throw UsageError("weight_decay must be >= 0");
  if (!(barlow_lambda >= 0.0)) throw UsageError("barlow_lambda must be >= 0");
}

Vec group_normalize(const Eigen::Ref<const Vec>& v, int groups, double eps) {
  if (groups < 1 || v.size() % groups != 0)
    throw UsageError("group_normalize: length " + std::to_string(v.size()) + " not divisible by " +
                     std::to_string(groups) + " groups");
  if (!(eps > 0.0)) throw UsageError("group_normalize: eps must be > 0");
  Mat x = v;
  Mat inv(groups, 1);
  normalize_groups(x, groups, eps, inv);
  return x.col(0);
}

Vec forward(const AdapterParams& params, const Eigen::Ref<const Vec>& f) {
  return forward_trace(params, Mat(f)).out.col(0);
}

Mat forward_columns(const AdapterParams& params, const Mat& features) { return forward_trace(params, features).out; }

LossAndGrads simsiam_loss_with_targets(const AdapterParams& params, std::span<const FeaturePair> batch,
                                       const Mat& target1, const Mat& target2, double weight_decay) {
  if (batch.empty()) throw UsageError("simsiam: empty batch");
  const BatchTrace t1 = forward_trace(params, stack(batch, true));
  const BatchTrace t2 = forward_trace(params, stack(batch, false));
  const Eigen::Index n = t1.out.cols();
  if (target1.rows() != t1.out.rows() || target1.cols() != n || target2.rows() != t2.out.rows() ||
      target2.cols() != n)
    throw UsageError("simsiam: target shape does not match the batch");
  const Mat p1 = params.pred * t1.out;
  const Mat p2 = params.pred * t2.out;

  const double scale = -0.5 / static_cast<double>(n);
  Mat dp1(p1.rows(), n), dp2(p2.rows(), n);
  double loss = 0.0;

  // d cos(p, z) / dp = z / (|p||z|) - cos * p / |p|^2, z held constant.
  auto term = [&](const auto& p, const auto& z, auto dp) {
    const double np = p.norm();
    const double nz = z.norm();
    if (np < kMinNorm || nz < kMinNorm) throw NumericalError("simsiam: zero-norm embedding (collapse)");
    const double c = p.dot(z) / (np * nz);
    dp = scale * (z / (np * nz) - c * p / (np * np));
    return c;
  };
  for (Eigen::Index b = 0; b < n; ++b) {
    const double c1 = term(p1.col(b), target2.col(b), dp1.col(b));
    const double c2 = term(p2.col(b), target1.col(b), dp2.col(b));
    loss += scale * (c1 + c2);
  }

  LossAndGrads out{loss, params.zeros_like()};
  out.grads.pred.noalias() = dp1 * t1.out.transpose() + dp2 * t2.out.transpose();
  backward_trace(params, t1, params.pred.transpose() * dp1, out.grads);
  backward_trace(params, t2, params.pred.transpose() * dp2, out.grads);
  add_weight_decay(params, weight_decay, out);
  return out;
}

LossAndGrads simsiam_loss_and_grads(const AdapterParams& params, std::span<const FeaturePair> batch,
                                    double weight_decay) {
  if (batch.empty()) throw UsageError("simsiam: empty batch");
  const auto [z1, z2] = simsiam_targets(params, batch);
  return simsiam_loss_with_targets(params, batch, z1, z2, weight_decay);
}

std::pair<Mat, Mat> simsiam_targets(const AdapterParams& params, std::span<const FeaturePair> batch) {
  return {forward_columns(params, stack(batch, true)), forward_columns(params, stack(batch, false))};
}

LossAndGrads barlow_loss_and_grads(const AdapterParams& params, std::span<const FeaturePair> batch,
                                   double lambda, double weight_decay) {
  if (batch.size() < 2) throw UsageError("barlow: batch size must be >= 2");
  const BatchTrace t1 = forward_trace(params, stack(batch, true));
  const BatchTrace t2 = forward_trace(params, stack(batch, false));
  const Eigen::Index d = params.dim();
  const Eigen::Index n = t1.out.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  // Per-dimension standardization across the batch (rows of d x n).
  auto standardize = [&](const Mat& z, Mat& zs, Vec& inv) {
    zs = z;
    inv.resize(d);
    for (Eigen::Index i = 0; i < d; ++i) {
      auto row = zs.row(i);
      row.array() -= row.mean();
      const double var = row.squaredNorm() * inv_n;
      inv[i] = 1.0 / std::sqrt(var + kGroupNormEps);
      row *= inv[i];
    }
  };
  Mat z1s, z2s;
  Vec inv1, inv2;
  standardize(t1.out, z1s, inv1);
  standardize(t2.out, z2s, inv2);

  const Mat c = inv_n * z1s * z2s.transpose();
  Mat gc(d, d);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < d; ++j) {
    for (Eigen::Index i = 0; i < d; ++i) {
      if (i == j) {
        loss += (1.0 - c(i, i)) * (1.0 - c(i, i));
        gc(i, i) = -2.0 * (1.0 - c(i, i));
      } else {
        loss += lambda * c(i, j) * c(i, j);
        gc(i, j) = 2.0 * lambda * c(i, j);
      }
    }
  }

  Mat dz1 = inv_n * gc * z2s;
  Mat dz2 = inv_n * gc.transpose() * z1s;
  auto unstandardize = [&](const Mat& zs, const Vec& inv, Mat& dz) {
    for (Eigen::Index i = 0; i < d; ++i) {
      auto g = dz.row(i);
      const auto y = zs.row(i);
      const double mean_g = g.sum() * inv_n;
      const double mean_gy = g.dot(y) * inv_n;
      g = inv[i] * (g.array() - mean_g - y.array() * mean_gy).matrix();
    }
  };
  unstandardize(z1s, inv1, dz1);
  unstandardize(z2s, inv2, dz2);

  LossAndGrads out{loss, params.zeros_like()};
  backward_trace(params, t1, dz1, out.grads);
  backward_trace(params, t2, dz2, out.grads);
  add_weight_decay(params, weight_decay, out);
  return out;
}

LossAndGrads loss_and_grads(const AdapterParams& params, std::span<const FeaturePair> batch,
                            const OptimConfig& config, double weight_decay) {
  if (config.loss == LossKind::SimSiam) return simsiam_loss_and_grads(params, batch, weight_decay);
  return barlow_loss_and_grads(params, batch, config.barlow_lambda, weight_decay);
}

void sgd_step(AdapterParams& params, const AdapterParams& grads, const OptimConfig& config) {
  config.validate();
  if (grads.w1.rows() != params.w1.rows() || grads.w1.cols() != params.w1.cols() ||
      grads.b1.size() != params.b1.size() || grads.w2.rows() != params.w2.rows() ||
      grads.w2.cols() != params.w2.cols() || grads.b2.size() != params.b2.size() ||
      grads.pred.rows() != params.pred.rows() || grads.pred.cols() != params.pred.cols())
    throw UsageError("sgd_step: gradient shapes do not match parameters");
  if (!grads.all_finite()) throw NumericalError("sgd_step: non-finite gradient, update refused");
  const double lr = config.learning_rate;
  const double wd = config.weight_decay;
  auto param_tensors = params.tensors();
  const auto grad_tensors = grads.tensors();
  for (std::size_t k = 0; k < param_tensors.size(); ++k) {
    auto theta = param_tensors[k];
    const auto g = grad_tensors[k];
    for (std::size_t i = 0; i < theta.size(); ++i) theta[i] -= lr * (g[i] + wd * theta[i]);
  }
}

}  // namespace perfood
