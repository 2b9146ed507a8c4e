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

#include "perfood/classify.hpp"

#include <algorithm>
#include <cmath>

namespace perfood {

namespace {

double safe_cosine(double dot, double sq_a, double sq_b) {
  if (sq_a == 0.0 || sq_b == 0.0) throw NumericalError("zero-norm embedding in similarity search");
  return std::clamp(dot / (std::sqrt(sq_a) * std::sqrt(sq_b)), -1.0, 1.0);
}

}  // namespace

void WindowConfig::validate() const {
  if (k < 1) throw UsageError("window k must be >= 1");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw UsageError("alpha must lie in [0, 1]");
  if (t_min < k) throw UsageError("t_min must be >= k");
}

void AdaptationConfig::validate() const {
  batch.validate();
  optim.validate();
  if (min_buffer < 1) throw UsageError("min_buffer must be >= 1");
  if (groups < 1) throw UsageError("group count must be >= 1");
  if (!(init_sigma >= 0.0)) throw UsageError("init_sigma must be >= 0");
  if (enabled() && optim.loss == LossKind::Barlow && batch.batch_size < 2)
    throw UsageError("barlow loss needs batch_size >= 2");
}

// ---------------------------------------------------------------------------
// AdaptiveEmbedding

AdaptiveEmbedding::AdaptiveEmbedding(Eigen::Index dim, AdaptationConfig config, std::uint64_t seed)
    : dim_(dim), config_(std::move(config)), rng_(derive_rng(seed, 0x61646170)) {
  if (dim_ < 1) throw UsageError("embedding dimension must be >= 1");
  config_.validate();
  if (config_.enabled()) {
    if (dim_ % config_.groups != 0)
      throw UsageError("feature dimension " + std::to_string(dim_) + " not divisible by group count " +
                       std::to_string(config_.groups));
    adapter_ = AdapterParams::near_identity(dim_, config_.groups, rng_, config_.init_sigma, config_.activation,
                                            config_.residual);
  }
}

Vec AdaptiveEmbedding::project(const Eigen::Ref<const Vec>& f) const {
  if (f.size() != dim_) throw DataError("feature dimension mismatch");
  if (!config_.enabled()) return f;
  return forward(adapter_, f);
}

Mat AdaptiveEmbedding::project_columns(const Mat& features) const {
  if (features.rows() != dim_) throw DataError("feature dimension mismatch");
  if (!config_.enabled()) return features;
  return forward_columns(adapter_, features);
}

std::optional<std::size_t> AdaptiveEmbedding::slot_of(ClassLabel label) const {
  auto it = slot_lookup_.find(label);
  if (it == slot_lookup_.end()) return std::nullopt;
  return it->second;
}

void AdaptiveEmbedding::append_column(const Vec& projected) {
  const auto n = static_cast<Eigen::Index>(history_.size());
  cache_.col(n - 1) = projected;
  sq_norms_[n - 1] = projected.squaredNorm();
}

void AdaptiveEmbedding::refresh() {
  const auto n = static_cast<Eigen::Index>(history_.size());
  cache_.leftCols(n) = forward_columns(adapter_, Mat(raw_.leftCols(n)));
  sq_norms_.head(n) = cache_.leftCols(n).colwise().squaredNorm().transpose();
}

void AdaptiveEmbedding::observe(LabeledObservation obs) {
  if (obs.feature.size() != dim_) throw DataError("feature dimension mismatch");
  check_feature(obs.feature);
  const Vec feature = obs.feature;
  const ClassLabel label = obs.label;
  history_.push(std::move(obs));

  auto [it, inserted] = slot_lookup_.try_emplace(label, slot_lookup_.size());
  slots_.push_back(it->second);

  const auto n = static_cast<Eigen::Index>(history_.size());
  if (n > raw_.cols()) {
    const Eigen::Index cap = std::max<Eigen::Index>(16, 2 * raw_.cols());
    raw_.conservativeResize(dim_, cap);
    cache_.conservativeResize(dim_, cap);
    sq_norms_.conservativeResize(cap);
  }
  raw_.col(n - 1) = feature;

  if (config_.enabled() && history_.size() >= static_cast<std::size_t>(config_.min_buffer)) {
    const auto batch = sample_batch(history_, config_.batch, rng_);
    const LossAndGrads lg = loss_and_grads(adapter_, batch, config_.optim);
    sgd_step(adapter_, lg.grads, config_.optim);
    last_loss_ = lg.loss;
    ++updates_;
    ++version_;
    refresh();
  } else {
    append_column(project(feature));
  }
}

// ---------------------------------------------------------------------------
// Scoring

ScoreVector fuse(const ScoreVector& sb, const ScoreVector& sw, double alpha) {
  if (sb.size() != sw.size()) throw UsageError("fuse: score vectors have different key sets");
  ScoreVector r;
  r.labels = sb.labels;
  r.values.resize(sb.size());
  for (std::size_t i = 0; i < sb.size(); ++i) {
    double w;
    if (sw.labels[i] == sb.labels[i]) {
      w = sw.values[i];
    } else {
      auto found = sw.find(sb.labels[i]);
      if (!found) throw UsageError("fuse: score vectors have different key sets");
      w = *found;
    }
    r.values[i] = sb.values[i] * std::pow(w, alpha);
  }
  return r;
}

std::optional<std::size_t> argmax_recent(std::span<const double> values, std::span<const int> recency) {
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!best || values[i] > values[*best] || (values[i] == values[*best] && recency[i] > recency[*best]))
      best = i;
  }
  return best;
}

PersonalClassifier::PersonalClassifier(Eigen::Index dim, WindowConfig window, AdaptationConfig adaptation,
                                       std::uint64_t seed)
    : window_(window), embedding_(dim, std::move(adaptation), seed) {
  window_.validate();
}

ClassMaxima PersonalClassifier::single_image_maxima(const Eigen::Ref<const Vec>& f) const {
  const auto& hist = history();
  if (hist.empty()) throw UsageError("single_image_scores: empty history");
  const Vec q = embedding_.project(f);
  const double q_sq = q.squaredNorm();
  const auto x = embedding_.projected();
  const Vec dots = x.transpose() * q;
  const auto sq = embedding_.projected_sq_norms();
  const auto slots = embedding_.class_slots();

  const std::size_t m = hist.classes().size();
  ClassMaxima out;
  out.scores.labels = hist.classes();
  out.scores.values.assign(m, -INFINITY);
  out.best_time.assign(m, 0);
  for (Eigen::Index t = 0; t < dots.size(); ++t) {
    const double c = safe_cosine(dots[t], sq[t], q_sq);
    const std::size_t s = slots[static_cast<std::size_t>(t)];
    if (c >= out.scores.values[s]) {
      out.scores.values[s] = c;
      out.best_time[s] = static_cast<int>(t) + 1;
    }
  }
  return out;
}

ScoreVector PersonalClassifier::single_image_scores(const Eigen::Ref<const Vec>& f) const {
  return softmax(single_image_maxima(f).scores);
}

std::vector<Window> PersonalClassifier::build_windows() const {
  const auto& hist = history();
  const auto k = static_cast<std::size_t>(window_.k);
  std::vector<Window> windows;
  if (hist.size() < k) return windows;
  const auto x = embedding_.projected();
  const Eigen::Index d = embedding_.dim();
  for (std::size_t i = 0; i + k <= hist.size(); ++i) {
    Window w;
    w.concat.resize(d * window_.k);
    for (std::size_t j = 0; j < k; ++j)
      w.concat.segment(static_cast<Eigen::Index>(j) * d, d) = x.col(static_cast<Eigen::Index>(i + j));
    w.label = hist[i + k - 1].label;
    w.start = static_cast<int>(i) + 1;
    windows.push_back(std::move(w));
  }
  return windows;
}

ScoreVector PersonalClassifier::raw_window_scores(const Eigen::Ref<const Vec>& f) const {
  const auto& hist = history();
  const auto n = static_cast<Eigen::Index>(hist.size());
  const Eigen::Index k = window_.k;
  if (n < k) throw UsageError("window_scores: history shorter than window length");

  const Vec q = embedding_.project(f);
  const auto x = embedding_.projected();
  const auto sq = embedding_.projected_sq_norms();
  const auto slots = embedding_.class_slots();

  // Query window: the last k-1 history embeddings followed by the query.
  Mat query(embedding_.dim(), k);
  double query_sq = q.squaredNorm();
  for (Eigen::Index j = 0; j + 1 < k; ++j) {
    query.col(j) = x.col(n - k + 1 + j);
    query_sq += sq[n - k + 1 + j];
  }
  query.col(k - 1) = q;

  // dots(t, j) = <x_t, query_j>; window i covers t = i .. i+k-1.
  const Mat dots = x.transpose() * query;
  const std::size_t m = hist.classes().size();
  std::vector<double> best(m, -INFINITY);
  std::vector<bool> has(m, false);
  double lowest = INFINITY;
  for (Eigen::Index i = 0; i + k <= n; ++i) {
    double dot = 0.0;
    double w_sq = 0.0;
    for (Eigen::Index j = 0; j < k; ++j) {
      dot += dots(i + j, j);
      w_sq += sq[i + j];
    }
    const double c = safe_cosine(dot, w_sq, query_sq);
    const std::size_t s = slots[static_cast<std::size_t>(i + k - 1)];
    best[s] = std::max(best[s], c);
    has[s] = true;
    lowest = std::min(lowest, c);
  }

  ScoreVector out;
  out.labels = hist.classes();
  out.values.resize(m);
  for (std::size_t s = 0; s < m; ++s) out.values[s] = has[s] ? best[s] : lowest;
  return out;
}

ScoreVector PersonalClassifier::window_scores(const Eigen::Ref<const Vec>& f) const {
  return softmax(raw_window_scores(f));
}

bool PersonalClassifier::windows_active() const {
  if (!window_.enabled) return false;
  const std::size_t n = history().size();
  return n + 1 >= static_cast<std::size_t>(window_.t_min) && n >= static_cast<std::size_t>(window_.k);
}

PredictionRecord PersonalClassifier::predict(const Eigen::Ref<const Vec>& f) const {
  PredictionRecord rec;
  rec.t = static_cast<int>(history().size()) + 1;
  if (history().empty()) return rec;

  const ClassMaxima sb = single_image_maxima(f);
  ScoreVector r = softmax(sb.scores);
  if (windows_active()) r = fuse(r, window_scores(f), window_.alpha);
  const auto best = argmax_recent(r.values, sb.best_time);
  rec.predicted = r.labels[*best];
  rec.scores = std::move(r);
  return rec;
}

void PersonalClassifier::observe(const Eigen::Ref<const Vec>& f, ClassLabel label) {
  LabeledObservation obs;
  obs.time = static_cast<int>(history().size()) + 1;
  obs.feature = f;
  obs.label = label;
  embedding_.observe(std::move(obs));
}

}  // namespace perfood
