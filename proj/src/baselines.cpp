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

#include "perfood/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "perfood/classify.hpp"

namespace perfood {

namespace {

double cos_with_norms(double dot, double sq_a, double sq_b) {
  if (sq_a == 0.0 || sq_b == 0.0) throw NumericalError("zero-norm embedding in similarity search");
  return std::clamp(dot / (std::sqrt(sq_a) * std::sqrt(sq_b)), -1.0, 1.0);
}

Mat stack_history(const ReplayBuffer& history, std::vector<std::size_t>& slots) {
  const auto& classes = history.classes();
  LabelMap<std::size_t> slot;
  for (std::size_t i = 0; i < classes.size(); ++i) slot.emplace(classes[i], i);
  Mat x(history.empty() ? 0 : history[0].feature.size(), static_cast<Eigen::Index>(history.size()));
  slots.resize(history.size());
  for (std::size_t t = 0; t < history.size(); ++t) {
    x.col(static_cast<Eigen::Index>(t)) = history[t].feature;
    slots[t] = slot.at(history[t].label);
  }
  return x;
}

}  // namespace

// ---------------------------------------------------------------------------
// PrototypeBank

PrototypeBank::PrototypeBank(std::vector<std::pair<ClassLabel, Vec>> entries) {
  if (entries.empty()) return;
  const Eigen::Index d = entries.front().second.size();
  prototypes_.resize(d, static_cast<Eigen::Index>(entries.size()));
  for (std::size_t i = 0; i < entries.size(); ++i) {
    auto& [label, proto] = entries[i];
    if (proto.size() != d) throw DataError("prototype bank: dimension mismatch");
    check_feature(proto);
    if (!index_.emplace(label, i).second) throw DataError("prototype bank: duplicate class");
    labels_.push_back(label);
    prototypes_.col(static_cast<Eigen::Index>(i)) = l2_normalize(proto);
  }
}

PrototypeBank PrototypeBank::from_noisy_prototypes(std::span<const ClassLabel> labels,
                                                   std::span<const Vec> prototypes, double coverage,
                                                   double noise_sigma, Rng& rng) {
  if (labels.size() != prototypes.size()) throw UsageError("prototype bank: labels/prototypes size mismatch");
  if (!(coverage > 0.0 && coverage <= 1.0)) throw UsageError("prototype bank: coverage must lie in (0, 1]");
  std::vector<std::size_t> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[uniform_index(rng, i)]);
  const auto keep = static_cast<std::size_t>(std::lround(coverage * static_cast<double>(labels.size())));
  order.resize(std::max<std::size_t>(1, keep));
  std::sort(order.begin(), order.end());

  std::normal_distribution<double> normal(0.0, noise_sigma);
  std::vector<std::pair<ClassLabel, Vec>> entries;
  for (std::size_t i : order) {
    Vec p = prototypes[i];
    if (noise_sigma > 0.0)
      for (Eigen::Index j = 0; j < p.size(); ++j) p[j] += normal(rng);
    entries.emplace_back(labels[i], l2_normalize(p));
  }
  return PrototypeBank(std::move(entries));
}

std::optional<std::size_t> PrototypeBank::index_of(ClassLabel label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

// ---------------------------------------------------------------------------
// Static / 1-NN

ClassLabel static_predict(const PrototypeBank& bank, const Eigen::Ref<const Vec>& f) {
  if (bank.empty()) throw UsageError("static_predict: empty prototype bank");
  if (f.size() != bank.dim()) throw DataError("static_predict: dimension mismatch");
  const Vec dots = bank.prototypes().transpose() * f;
  const double f_sq = f.squaredNorm();
  std::size_t best = 0;
  double best_score = -INFINITY;
  for (Eigen::Index i = 0; i < dots.size(); ++i) {
    const double c = cos_with_norms(dots[i], 1.0, f_sq);
    if (c > best_score) {
      best_score = c;
      best = static_cast<std::size_t>(i);
    }
  }
  return bank.labels()[best];
}

std::optional<ClassLabel> one_nn_predict(const ReplayBuffer& history, const Eigen::Ref<const Vec>& f) {
  if (history.empty()) return std::nullopt;
  std::vector<std::size_t> slots;
  const Mat x = stack_history(history, slots);
  if (x.rows() != f.size()) throw DataError("one_nn_predict: dimension mismatch");
  const Vec dots = x.transpose() * f;
  const double f_sq = f.squaredNorm();
  double best = -INFINITY;
  ClassLabel label;
  for (Eigen::Index t = 0; t < dots.size(); ++t) {
    const double c = cos_with_norms(dots[t], x.col(t).squaredNorm(), f_sq);
    if (c >= best) {
      best = c;
      label = history[static_cast<std::size_t>(t)].label;
    }
  }
  return label;
}

// ---------------------------------------------------------------------------
// Online linear (one-vs-rest hinge)

OnlineLinearModel::OnlineLinearModel(Eigen::Index dim, double learning_rate, double margin)
    : dim_(dim), lr_(learning_rate), margin_(margin) {
  if (dim_ < 1) throw UsageError("online linear: dimension must be >= 1");
  if (!(lr_ >= 0.0)) throw UsageError("online linear: learning rate must be >= 0");
  if (!(margin_ >= 0.0)) throw UsageError("online linear: margin must be >= 0");
}

std::optional<ClassLabel> OnlineLinearModel::predict(const Eigen::Ref<const Vec>& f) const {
  if (classes_.empty()) return std::nullopt;
  if (f.size() != dim_) throw DataError("online linear: dimension mismatch");
  std::size_t best = 0;
  for (std::size_t i = 1; i < classes_.size(); ++i) {
    const double si = weights_[i].dot(f);
    const double sb = weights_[best].dot(f);
    if (si > sb || (si == sb && last_seen_[i] > last_seen_[best])) best = i;
  }
  return classes_[best];
}

void OnlineLinearModel::update(const Eigen::Ref<const Vec>& f, ClassLabel truth) {
  if (f.size() != dim_) throw DataError("online linear: dimension mismatch");
  auto it = std::find(classes_.begin(), classes_.end(), truth);
  std::size_t ti;
  if (it == classes_.end()) {
    classes_.push_back(truth);
    weights_.push_back(Vec::Zero(dim_));
    last_seen_.push_back(0);
    ti = classes_.size() - 1;
  } else {
    ti = static_cast<std::size_t>(it - classes_.begin());
  }
  last_seen_[ti] = ++clock_;

  std::vector<double> scores(classes_.size());
  for (std::size_t i = 0; i < classes_.size(); ++i) scores[i] = weights_[i].dot(f);

  std::optional<std::size_t> wrong;
  for (std::size_t i = 0; i < classes_.size(); ++i) {
    if (i == ti) continue;
    if (!wrong || scores[i] > scores[*wrong]) wrong = i;
  }
  if (scores[ti] < margin_) weights_[ti] += lr_ * f;
  if (wrong && scores[*wrong] > -margin_) weights_[*wrong] -= lr_ * f;
}

std::optional<ClassLabel> OnlineLinearModel::step(const Eigen::Ref<const Vec>& f, ClassLabel truth) {
  auto p = predict(f);
  update(f, truth);
  return p;
}

const Vec& OnlineLinearModel::weights(ClassLabel label) const {
  auto it = std::find(classes_.begin(), classes_.end(), label);
  if (it == classes_.end()) throw UsageError("online linear: unknown class");
  return weights_[static_cast<std::size_t>(it - classes_.begin())];
}

// ---------------------------------------------------------------------------
// SPC / SPC++

void SpcConfig::validate() const {
  if (!(mix_weight >= 0.0 && mix_weight <= 1.0)) throw UsageError("spc mix_weight must lie in [0, 1]");
  if (!(decay_halflife > 0.0)) throw UsageError("spc decay_halflife must be > 0");
  if (!(freq_weight >= 0.0)) throw UsageError("spc freq_weight must be >= 0");
}

DecayedFrequency::DecayedFrequency(double halflife) : halflife_(halflife) {
  if (!(halflife_ > 0.0)) throw UsageError("decay halflife must be > 0");
}

void DecayedFrequency::observe(ClassLabel label, int t) {
  Entry& e = entries_[label];
  if (e.at > t) throw UsageError("decayed frequency: time went backwards");
  e.value = e.value * std::exp2(-static_cast<double>(t - e.at) / halflife_) + 1.0;
  e.at = t;
}

double DecayedFrequency::raw(ClassLabel label, int t) const {
  auto it = entries_.find(label);
  if (it == entries_.end()) return 0.0;
  return it->second.value * std::exp2(-static_cast<double>(t - it->second.at) / halflife_);
}

double DecayedFrequency::normalized(ClassLabel label, int t) const {
  double total = 0.0;
  for (const auto& [l, e] : entries_) total += e.value * std::exp2(-static_cast<double>(t - e.at) / halflife_);
  if (total == 0.0) return 0.0;
  return raw(label, t) / total;
}

ScoreVector spc_scores(const Eigen::Ref<const Mat>& history, std::span<const std::size_t> slots,
                       std::span<const ClassLabel> classes, const Mat& bank,
                       std::span<const ClassLabel> bank_labels, const SpcConfig& config,
                       const Eigen::Ref<const Vec>& query, std::vector<int>* best_time) {
  return spc_scores(history, slots, classes, bank, bank_labels, config, query, query, best_time);
}

ScoreVector spc_scores(const Eigen::Ref<const Mat>& history, std::span<const std::size_t> slots,
                       std::span<const ClassLabel> classes, const Mat& bank,
                       std::span<const ClassLabel> bank_labels, const SpcConfig& config,
                       const Eigen::Ref<const Vec>& query, const Eigen::Ref<const Vec>& bank_query,
                       std::vector<int>* best_time) {
  const double q_sq = query.squaredNorm();
  const double bq_sq = bank_query.squaredNorm();
  const double mw = config.mix_weight;

  ScoreVector out;
  std::vector<int> times;
  if (history.cols() == 0) {
    // Cold start: the generic model alone.
    if (bank.cols() == 0) throw UsageError("spc: empty history and empty prototype bank");
    const Vec bd = bank.transpose() * bank_query;
    for (Eigen::Index b = 0; b < bd.size(); ++b)
      out.push(bank_labels[static_cast<std::size_t>(b)],
               mw * -1.0 + (1.0 - mw) * cos_with_norms(bd[b], bank.col(b).squaredNorm(), bq_sq));
    times.assign(out.size(), 0);
  } else {
    const std::size_t m = classes.size();
    std::vector<double> nn(m, -1.0);
    times.assign(m, 0);
    const Vec hd = history.transpose() * query;
    for (Eigen::Index t = 0; t < hd.size(); ++t) {
      const double c = cos_with_norms(hd[t], history.col(t).squaredNorm(), q_sq);
      const std::size_t s = slots[static_cast<std::size_t>(t)];
      if (times[s] == 0 || c >= nn[s]) {
        nn[s] = c;
        times[s] = static_cast<int>(t) + 1;
      }
    }
    LabelMap<Eigen::Index> bank_index;
    for (std::size_t b = 0; b < bank_labels.size(); ++b) bank_index.emplace(bank_labels[b], static_cast<Eigen::Index>(b));
    for (std::size_t s = 0; s < m; ++s) {
      double generic = -1.0;
      auto it = bank_index.find(classes[s]);
      if (it != bank_index.end())
        generic = cos_with_norms(bank.col(it->second).dot(bank_query), bank.col(it->second).squaredNorm(), bq_sq);
      out.push(classes[s], mw * nn[s] + (1.0 - mw) * generic);
    }
  }
  if (best_time) *best_time = std::move(times);
  return out;
}

void apply_frequency_prior(ScoreVector& scores, const DecayedFrequency& freq, const SpcConfig& config, int t) {
  if (config.freq_weight == 0.0) return;
  for (std::size_t i = 0; i < scores.size(); ++i)
    scores.values[i] *= 1.0 + config.freq_weight * freq.normalized(scores.labels[i], t);
}

std::optional<ClassLabel> spc_predict(const ReplayBuffer& history, const PrototypeBank& bank,
                                      const SpcConfig& config, const Eigen::Ref<const Vec>& f) {
  config.validate();
  if (bank.empty()) throw UsageError("spc_predict: empty prototype bank");
  std::vector<std::size_t> slots;
  const Mat x = stack_history(history, slots);
  std::vector<int> times;
  const ScoreVector s = spc_scores(x, slots, history.classes(), bank.prototypes(), bank.labels(), config, f, &times);
  return s.labels[*argmax_recent(s.values, times)];
}

std::optional<ClassLabel> spc_pp_predict(const ReplayBuffer& history, const PrototypeBank& bank,
                                         const SpcConfig& config, const Eigen::Ref<const Vec>& f, int t) {
  config.validate();
  if (bank.empty()) throw UsageError("spc_pp_predict: empty prototype bank");
  std::vector<std::size_t> slots;
  const Mat x = stack_history(history, slots);
  std::vector<int> times;
  ScoreVector s = spc_scores(x, slots, history.classes(), bank.prototypes(), bank.labels(), config, f, &times);
  DecayedFrequency freq(config.decay_halflife);
  for (const auto& item : history.items())
    if (item.time < t) freq.observe(item.label, item.time);
  apply_frequency_prior(s, freq, config, t);
  return s.labels[*argmax_recent(s.values, times)];
}

}  // namespace perfood
