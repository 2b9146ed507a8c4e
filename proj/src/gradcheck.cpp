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

#include "perfood/gradcheck.hpp"

#include <algorithm>
#include <cmath>

namespace perfood {

namespace {

Vec random_unit(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
  return l2_normalize(v);
}

// Smallest |pre-activation| over the batch; finite differences straddling a
// ReLU kink are meaningless.
double min_abs_preactivation(const AdapterParams& p, std::span<const FeaturePair> batch) {
  double m = INFINITY;
  for (const auto& pair : batch) {
    for (const Vec* f : {&pair.first, &pair.second}) {
      Vec h = group_normalize(p.w1 * *f + p.b1, p.groups);
      m = std::min(m, h.cwiseAbs().minCoeff());
    }
  }
  return m;
}

using LMat = Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

LMat widen(const Mat& m) { return m.cast<long double>(); }

// Encoder output for one view, column per pair, evaluated from scratch.
LMat encode(const AdapterParams& p, std::span<const FeaturePair> batch, bool first) {
  const Eigen::Index d = p.dim();
  const Eigen::Index gsize = d / p.groups;
  LMat out(d, static_cast<Eigen::Index>(batch.size()));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const Vec& f = first ? batch[b].first : batch[b].second;
    LMat h = widen(p.w1) * widen(f) + widen(p.b1);
    for (int g = 0; g < p.groups; ++g) {
      auto seg = h.block(g * gsize, 0, gsize, 1);
      const long double mean = seg.sum() / gsize;
      long double var = 0;
      for (Eigen::Index i = 0; i < gsize; ++i) var += (seg(i, 0) - mean) * (seg(i, 0) - mean);
      var /= gsize;
      const long double inv = 1.0L / std::sqrt(var + static_cast<long double>(kGroupNormEps));
      for (Eigen::Index i = 0; i < gsize; ++i) seg(i, 0) = (seg(i, 0) - mean) * inv;
    }
    if (p.activation == Activation::Relu) h = h.cwiseMax(0.0L);
    out.col(static_cast<Eigen::Index>(b)) = widen(p.w2) * h + widen(p.b2);
    if (p.residual) out.col(static_cast<Eigen::Index>(b)) += widen(f);
  }
  return out;
}

long double decay_term(const AdapterParams& p, double weight_decay) {
  long double sq = 0;
  for (const auto t : p.tensors())
    for (double v : t) sq += static_cast<long double>(v) * v;
  return 0.5L * weight_decay * sq;
}

}  // namespace

long double reference_simsiam_loss(const AdapterParams& p, std::span<const FeaturePair> batch, const Mat& target1,
                                   const Mat& target2, double weight_decay) {
  const LMat q1 = widen(p.pred) * encode(p, batch, true);
  const LMat q2 = widen(p.pred) * encode(p, batch, false);
  const LMat z1 = widen(target1), z2 = widen(target2);
  long double sum = 0;
  for (Eigen::Index b = 0; b < q1.cols(); ++b) {
    sum += q1.col(b).dot(z2.col(b)) / (q1.col(b).norm() * z2.col(b).norm());
    sum += q2.col(b).dot(z1.col(b)) / (q2.col(b).norm() * z1.col(b).norm());
  }
  return -0.5L * sum / static_cast<long double>(q1.cols()) + decay_term(p, weight_decay);
}

long double reference_barlow_loss(const AdapterParams& p, std::span<const FeaturePair> batch, double lambda,
                                  double weight_decay) {
  LMat z[2] = {encode(p, batch, true), encode(p, batch, false)};
  const Eigen::Index d = p.dim();
  const auto n = static_cast<long double>(batch.size());
  for (auto& m : z) {
    for (Eigen::Index i = 0; i < d; ++i) {
      const long double mean = m.row(i).sum() / n;
      m.row(i).array() -= mean;
      const long double var = m.row(i).squaredNorm() / n;
      m.row(i) /= std::sqrt(var + static_cast<long double>(kGroupNormEps));
    }
  }
  long double loss = 0;
  for (Eigen::Index i = 0; i < d; ++i)
    for (Eigen::Index j = 0; j < d; ++j) {
      const long double c = z[0].row(i).dot(z[1].row(j)) / n;
      loss += i == j ? (1 - c) * (1 - c) : lambda * c * c;
    }
  return loss + decay_term(p, weight_decay);
}

GradCheckInstance make_gradcheck_instance(const GradCheckOptions& opts, Rng& rng) {
  const Eigen::Index d = opts.dim;
  std::normal_distribution<double> normal;
  for (int attempt = 0; attempt < 1000; ++attempt) {
    GradCheckInstance inst;
    inst.params = AdapterParams::zeros(d, opts.groups, Activation::Relu);
    const double ws = 1.0 / std::sqrt(static_cast<double>(d));
    for (Mat* m : {&inst.params.w1, &inst.params.w2, &inst.params.pred})
      for (Eigen::Index j = 0; j < d; ++j)
        for (Eigen::Index i = 0; i < d; ++i) (*m)(i, j) = (i == j ? 1.0 : 0.0) + ws * normal(rng);
    for (Eigen::Index i = 0; i < d; ++i) {
      inst.params.b1[i] = 0.1 * normal(rng);
      inst.params.b2[i] = 0.1 * normal(rng);
    }
    for (int b = 0; b < opts.batch_size; ++b) {
      Vec f1 = random_unit(d, rng);
      Vec f2 = l2_normalize(f1 + 0.5 * random_unit(d, rng));
      inst.batch.push_back({f1, f2, ClassLabel(b % 2)});
    }
    if (min_abs_preactivation(inst.params, inst.batch) > 1e-3) return inst;
  }
  throw NumericalError("gradcheck: could not draw an instance away from activation kinks");
}

double relative_error(double analytic, double numeric) {
  const double denom = std::max(std::abs(analytic), std::abs(numeric));
  if (denom == 0.0) return 0.0;
  return std::abs(analytic - numeric) / denom;
}

void compare_with_finite_differences(const AdapterParams& params, const AdapterParams& analytic,
                                     const std::function<long double(const AdapterParams&)>& loss,
                                     const GradCheckOptions& opts, GradCheckReport& report) {
  AdapterParams probe = params;
  auto probe_tensors = probe.tensors();
  const auto grad_tensors = analytic.tensors();
  for (std::size_t k = 0; k < probe_tensors.size(); ++k) {
    for (std::size_t i = 0; i < probe_tensors[k].size(); ++i) {
      double& theta = probe_tensors[k][i];
      const double saved = theta;
      theta = saved + opts.step;
      const long double up = loss(probe);
      theta = saved - opts.step;
      const long double down = loss(probe);
      theta = saved;
      const auto numeric = static_cast<double>((up - down) / (2.0L * opts.step));
      const double a = grad_tensors[k][i];
      if (std::abs(a) < opts.skip_below && std::abs(numeric) < opts.skip_below) {
        ++report.skipped;
        continue;
      }
      const double err = relative_error(a, numeric);
      ++report.checked;
      report.max_rel_error = std::max(report.max_rel_error, err);
      if (!(err <= opts.tolerance)) ++report.failures;
    }
  }
}

GradCheckReport run_gradcheck(LossKind loss, const GradCheckOptions& opts) {
  GradCheckReport report;
  report.loss = loss;
  Rng rng = derive_rng(opts.seed, loss == LossKind::SimSiam ? 1 : 2);
  for (int n = 0; n < opts.instances; ++n) {
    GradCheckInstance inst = make_gradcheck_instance(opts, rng);
    inst.params.residual = n % 2 == 1;  // cover both adapter forms
    // Stop-gradient: the targets are frozen at the unperturbed parameters.
    const auto [z1, z2] = simsiam_targets(inst.params, inst.batch);
    const LossAndGrads analytic =
        loss == LossKind::SimSiam ? simsiam_loss_with_targets(inst.params, inst.batch, z1, z2, opts.weight_decay)
                                  : barlow_loss_and_grads(inst.params, inst.batch, opts.barlow_lambda, opts.weight_decay);
    // Finite differences run on an independent extended-precision evaluation
    // of the same objective, so entries near the skip threshold are not lost
    // to round-off against an O(1) loss.
    compare_with_finite_differences(
        inst.params, analytic.grads,
        [&](const AdapterParams& p) {
          return loss == LossKind::SimSiam ? reference_simsiam_loss(p, inst.batch, z1, z2, opts.weight_decay)
                                           : reference_barlow_loss(p, inst.batch, opts.barlow_lambda, opts.weight_decay);
        },
        opts, report);
    ++report.instances;
  }
  return report;
}

}  // namespace perfood
