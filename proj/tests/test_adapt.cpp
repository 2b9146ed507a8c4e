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

#include <doctest.h>

#include <cmath>

#include "helpers.hpp"
#include "oracles.hpp"
#include "perfood/adapt.hpp"
#include "perfood/gradcheck.hpp"

using namespace perfood;
using testing::vec;

namespace {

std::vector<FeaturePair> random_batch(Eigen::Index d, int n, Rng& rng) {
  std::vector<FeaturePair> batch;
  for (int i = 0; i < n; ++i) {
    const Vec f = testing::random_unit(d, rng);
    batch.push_back({f, l2_normalize(f + 0.3 * testing::random_unit(d, rng)), ClassLabel(i % 3)});
  }
  return batch;
}

double mean_within_class_cosine(const std::vector<Vec>& feats, const std::vector<int>& labels) {
  double sum = 0;
  int n = 0;
  for (std::size_t i = 0; i < feats.size(); ++i)
    for (std::size_t j = i + 1; j < feats.size(); ++j)
      if (labels[i] == labels[j]) sum += cosine_similarity(feats[i], feats[j]), ++n;
  return sum / n;
}

}  // namespace

TEST_SUITE("adapt") {

TEST_CASE("group normalization of a small vector") {
  const Vec out = group_normalize(vec({1, 3, 5, 7}), 2, 1e-12);
  for (int i = 0; i < 4; ++i) CHECK(out[i] == doctest::Approx(i % 2 == 0 ? -1.0 : 1.0).epsilon(1e-9));
  CHECK(group_normalize(Vec::Constant(6, 2.5), 3).isZero(0.0));
  const Vec whole = group_normalize(vec({4, -1, 0.5, 9, 2}), 1);
  CHECK(std::abs(whole.mean()) < 1e-9);
  CHECK_THROWS_AS(group_normalize(vec({1, 2, 3}), 2), UsageError);
}

TEST_CASE("forward matches the reference evaluation") {
  Rng rng(1);
  for (bool residual : {false, true}) {
    AdapterParams p = AdapterParams::near_identity(8, 2, rng, 0.3, Activation::Relu, residual);
    p.b1 = testing::random_vec(8, rng, 0.1);
    p.b2 = testing::random_vec(8, rng, 0.1);
    const Vec f = testing::random_unit(8, rng);
    const Vec z = forward(p, f);
    const auto ref = oracle::adapter_forward(p, oracle::to_values(f));
    for (int i = 0; i < 8; ++i) CHECK(std::abs(z[i] - ref[static_cast<std::size_t>(i)]) < 1e-12);
    Mat cols(8, 2);
    cols << f, f;
    CHECK((forward_columns(p, cols).col(1) - z).norm() < 1e-14);
  }
}

TEST_CASE("constant input maps to the output bias") {
  Rng rng(2);
  AdapterParams p = AdapterParams::near_identity(8, 2, rng, 0.0);
  const Vec z = forward(p, Vec::Constant(8, 0.4));
  CHECK(z.norm() < 1e-12);
  p.b2 = testing::random_vec(8, rng);
  CHECK((forward(p, Vec::Constant(8, -1.0)) - p.b2).norm() < 1e-12);
}

TEST_CASE("forward is pure and linear in W2") {
  Rng rng(3);
  AdapterParams p = AdapterParams::near_identity(8, 4, rng, 0.2);
  const Vec f = testing::random_unit(8, rng);
  CHECK(forward(p, f) == forward(p, f));
  const Vec base = forward(p, f);
  AdapterParams q = p;
  q.w2(2, 5) += 0.1;
  const Vec d1 = forward(q, f) - base;
  q.w2(2, 5) += 0.1;
  const Vec d2 = forward(q, f) - base;
  CHECK((d2 - 2.0 * d1).norm() < 1e-12);
  CHECK_THROWS_AS(forward(p, Vec(Vec::Ones(6))), Error);
}

TEST_CASE("simsiam loss of identical views is -1") {
  Rng rng(4);
  AdapterParams p = AdapterParams::near_identity(8, 2, rng, 0.1);
  p.pred = Mat::Identity(8, 8);
  const Vec f = testing::random_unit(8, rng);
  const std::vector<FeaturePair> batch{{f, f, ClassLabel(0)}};
  CHECK(simsiam_loss_and_grads(p, batch).loss == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("simsiam loss stays within bounds") {
  Rng rng(5);
  for (int i = 0; i < 50; ++i) {
    const AdapterParams p = AdapterParams::near_identity(8, 2, rng, 0.5);
    const double loss = simsiam_loss_and_grads(p, random_batch(8, 5, rng)).loss;
    CHECK(loss >= -1.0 - 1e-12);
    CHECK(loss <= 1.0 + 1e-12);
  }
  CHECK_THROWS_AS(simsiam_loss_and_grads(AdapterParams::near_identity(8, 2, rng), {}), UsageError);
}

TEST_CASE("simsiam surfaces collapsed embeddings") {
  const AdapterParams p = AdapterParams::zeros(8, 2);
  Rng rng(6);
  CHECK_THROWS_AS(simsiam_loss_and_grads(p, random_batch(8, 2, rng)), NumericalError);
}

TEST_CASE("barlow loss of identical views") {
  Rng rng(7);
  const AdapterParams p = AdapterParams::near_identity(8, 2, rng, 0.2);
  std::vector<FeaturePair> batch;
  for (int i = 0; i < 16; ++i) {
    const Vec f = testing::random_unit(8, rng);
    batch.push_back({f, f, ClassLabel(0)});
  }
  // Diagonal is 1 up to the eps floor, so only redundancy remains.
  const double no_redundancy = barlow_loss_and_grads(p, batch, 0.0).loss;
  CHECK(no_redundancy < 1e-6);
  CHECK(barlow_loss_and_grads(p, batch, 0.005).loss >= no_redundancy);
  CHECK_THROWS_AS(barlow_loss_and_grads(p, std::span(batch).first(1), 0.005), UsageError);
}

TEST_CASE("barlow with zero lambda ignores off-diagonal terms") {
  Rng rng(8);
  const AdapterParams p = AdapterParams::near_identity(8, 2, rng, 0.2);
  const auto batch = random_batch(8, 6, rng);
  const double l0 = barlow_loss_and_grads(p, batch, 0.0).loss;
  const double l1 = barlow_loss_and_grads(p, batch, 1.0).loss;
  CHECK(l0 >= 0.0);
  CHECK(l1 > l0);
  // The diagonal part alone from the long-double reference.
  CHECK(static_cast<double>(reference_barlow_loss(p, batch, 0.0, 0.0)) == doctest::Approx(l0).epsilon(1e-9));
}

TEST_CASE("analytic gradients agree with finite differences") {
  GradCheckOptions opts;
  opts.instances = 4;
  for (LossKind loss : {LossKind::SimSiam, LossKind::Barlow}) {
    const GradCheckReport r = run_gradcheck(loss, opts);
    CAPTURE(r.max_rel_error);
    CHECK(r.ok());
    CHECK(r.instances == 4);
  }
}

TEST_CASE("relative error") {
  CHECK(relative_error(0.0, 0.0) == 0.0);
  CHECK(relative_error(1.0, 0.5) == 0.5);
  CHECK(relative_error(-2.0, 2.0) == 2.0);
}

TEST_CASE("sgd step arithmetic") {
  AdapterParams p = AdapterParams::zeros(2, 1);
  AdapterParams g = p.zeros_like();
  p.w1(0, 0) = 1.0;
  const AdapterParams before = p;
  sgd_step(p, g, {.learning_rate = 0.1, .weight_decay = 0.0});
  CHECK(p.w1 == before.w1);
  g.w1(0, 0) = 1.0;
  sgd_step(p, g, {.learning_rate = 0.1, .weight_decay = 0.0});
  CHECK(p.w1(0, 0) == doctest::Approx(0.9));
  g.w1(0, 0) = NAN;
  const AdapterParams kept = p;
  CHECK_THROWS_AS(sgd_step(p, g, {.learning_rate = 0.1}), NumericalError);
  CHECK(p.w1 == kept.w1);
}

TEST_CASE("weight decay shrinks parameters") {
  AdapterParams p = AdapterParams::zeros(2, 1);
  p.b2 << 2.0, -4.0;
  sgd_step(p, p.zeros_like(), {.learning_rate = 0.5, .weight_decay = 0.1});
  CHECK(p.b2[0] == doctest::Approx(1.9));
  CHECK(p.b2[1] == doctest::Approx(-3.8));
}

TEST_CASE("small steps descend") {
  Rng rng(9);
  int violations = 0;
  for (int trial = 0; trial < 100; ++trial) {
    AdapterParams p = AdapterParams::near_identity(8, 2, rng, 0.3);
    const auto batch = random_batch(8, 6, rng);
    const OptimConfig cfg{.learning_rate = 1e-4, .weight_decay = 1e-4, .loss = trial % 2 ? LossKind::Barlow : LossKind::SimSiam};
    const double before = loss_and_grads(p, batch, cfg, cfg.weight_decay).loss;
    // SimSiam targets are held fixed, as in the update that produced the gradient.
    const auto [z1, z2] = simsiam_targets(p, batch);
    sgd_step(p, loss_and_grads(p, batch, cfg).grads, cfg);
    const double after = cfg.loss == LossKind::SimSiam
                             ? simsiam_loss_with_targets(p, batch, z1, z2, cfg.weight_decay).loss
                             : loss_and_grads(p, batch, cfg, cfg.weight_decay).loss;
    if (after > before) ++violations;
  }
  CHECK(violations <= 5);
}

TEST_CASE("training on same-class pairs tightens classes") {
  Rng rng(10);
  const Eigen::Index d = 16;
  // Three classes whose members differ by a shared two-dimensional style offset.
  std::vector<Vec> protos{testing::random_unit(d, rng), testing::random_unit(d, rng), testing::random_unit(d, rng)};
  const Vec s1 = testing::random_unit(d, rng), s2 = testing::random_unit(d, rng);
  ReplayBuffer buffer;
  std::vector<Vec> feats;
  std::vector<int> labels;
  std::normal_distribution<double> normal;
  for (int t = 1; t <= 60; ++t) {
    const int c = t % 3;
    const Vec f = l2_normalize(protos[static_cast<std::size_t>(c)] + 0.8 * normal(rng) * s1 + 0.8 * normal(rng) * s2 +
                               testing::random_vec(d, rng, 0.02));
    buffer.push({t, f, ClassLabel(c)});
    feats.push_back(f);
    labels.push_back(c);
  }
  AdapterParams p = AdapterParams::near_identity(d, 4, rng, 0.01, Activation::Relu, true);
  const double before = mean_within_class_cosine(feats, labels);
  const OptimConfig cfg{.learning_rate = 0.2};
  for (int step = 0; step < 200; ++step) {
    const auto batch = sample_dil(buffer, {32, SamplingMode::DIL, 0.05}, rng);
    sgd_step(p, loss_and_grads(p, batch, cfg).grads, cfg);
  }
  std::vector<Vec> adapted;
  for (const Vec& f : feats) adapted.push_back(forward(p, f));
  const double after = mean_within_class_cosine(adapted, labels);
  CAPTURE(before);
  CAPTURE(after);
  CHECK(after > before);
}

TEST_CASE("parameter bookkeeping") {
  Rng rng(11);
  AdapterParams p = AdapterParams::near_identity(8, 2, rng);
  CHECK(p.num_scalars() == 3 * 64 + 2 * 8);
  CHECK(p.all_finite());
  CHECK_NOTHROW(p.validate());
  p.groups = 3;
  CHECK_THROWS(p.validate());
  CHECK(parse_loss("barlow") == LossKind::Barlow);
  CHECK(to_string(parse_activation("identity")) == "identity");
  CHECK_THROWS_AS(parse_loss("byol"), UsageError);
}

}  // TEST_SUITE
