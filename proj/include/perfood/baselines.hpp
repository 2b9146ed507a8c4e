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

#pragma once

#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "perfood/core.hpp"
#include "perfood/replay.hpp"

namespace perfood {

/// Frozen unit-norm class prototypes of a generic (non-personal) model.
class PrototypeBank {
 public:
  PrototypeBank() = default;
  explicit PrototypeBank(std::vector<std::pair<ClassLabel, Vec>> entries);

  /// Noisy copies of `prototypes` for a random `coverage` fraction of `labels`.
  static PrototypeBank from_noisy_prototypes(std::span<const ClassLabel> labels, std::span<const Vec> prototypes,
                                             double coverage, double noise_sigma, Rng& rng);

  std::size_t size() const { return labels_.size(); }
  bool empty() const { return labels_.empty(); }
  Eigen::Index dim() const { return prototypes_.rows(); }
  const std::vector<ClassLabel>& labels() const { return labels_; }
  /// d x size, one unit-norm column per class.
  const Mat& prototypes() const { return prototypes_; }
  std::optional<std::size_t> index_of(ClassLabel label) const;
  bool contains(ClassLabel label) const { return index_of(label).has_value(); }

 private:
  std::vector<ClassLabel> labels_;
  Mat prototypes_;
  LabelMap<std::size_t> index_;
};

/// Nearest prototype over the frozen bank; ties go to the earlier bank entry.
ClassLabel static_predict(const PrototypeBank& bank, const Eigen::Ref<const Vec>& f);

/// Label of the stored raw feature with maximum cosine (most recent on ties).
std::optional<ClassLabel> one_nn_predict(const ReplayBuffer& history, const Eigen::Ref<const Vec>& f);

/// One-vs-rest online hinge classifier, one weight vector per seen class.
class OnlineLinearModel {
 public:
  explicit OnlineLinearModel(Eigen::Index dim, double learning_rate = 0.1, double margin = 1.0);

  /// argmax w^T f over seen classes, ties to the most recently observed class.
  std::optional<ClassLabel> predict(const Eigen::Ref<const Vec>& f) const;
  /// Registers `truth` if new, then applies the hinge updates.
  void update(const Eigen::Ref<const Vec>& f, ClassLabel truth);
  /// predict, then update; returns the prediction made before the update.
  std::optional<ClassLabel> step(const Eigen::Ref<const Vec>& f, ClassLabel truth);

  const std::vector<ClassLabel>& classes() const { return classes_; }
  const Vec& weights(ClassLabel label) const;

 private:
  Eigen::Index dim_;
  double lr_;
  double margin_;
  std::vector<ClassLabel> classes_;
  std::vector<Vec> weights_;
  std::vector<long> last_seen_;
  long clock_ = 0;
};

struct SpcConfig {
  double mix_weight = 0.85;
  double decay_halflife = 20.0;
  double freq_weight = 0.5;

  void validate() const;
};

/// Exponentially decayed occurrence counts: an occurrence at time tau weighs
/// 2^(-(t - tau) / halflife) at time t.
class DecayedFrequency {
 public:
  explicit DecayedFrequency(double halflife);

  void observe(ClassLabel label, int t);
  double raw(ClassLabel label, int t) const;
  /// raw(label, t) divided by the sum over all observed classes.
  double normalized(ClassLabel label, int t) const;

 private:
  struct Entry {
    double value = 0.0;
    int at = 0;
  };
  double halflife_;
  LabelMap<Entry> entries_;
};

/// Personal nearest-neighbor + generic nearest-class-mean mixture over
/// precomputed embeddings. `history` is d x n with `slots[t]` indexing into
/// `classes`; `bank` is d x B with labels `bank_labels`. With a non-empty
/// history only classes seen so far are scored, otherwise the bank classes.
/// `best_time` receives the time of each class's best personal match (0 if none).
ScoreVector spc_scores(const Eigen::Ref<const Mat>& history, std::span<const std::size_t> slots,
                       std::span<const ClassLabel> classes, const Mat& bank,
                       std::span<const ClassLabel> bank_labels, const SpcConfig& config,
                       const Eigen::Ref<const Vec>& query, std::vector<int>* best_time = nullptr);

/// As above, with the personal term scored on `query` and the generic term on
/// `bank_query`: an adapted personal embedding next to a frozen generic model.
ScoreVector spc_scores(const Eigen::Ref<const Mat>& history, std::span<const std::size_t> slots,
                       std::span<const ClassLabel> classes, const Mat& bank,
                       std::span<const ClassLabel> bank_labels, const SpcConfig& config,
                       const Eigen::Ref<const Vec>& query, const Eigen::Ref<const Vec>& bank_query,
                       std::vector<int>* best_time = nullptr);

std::optional<ClassLabel> spc_predict(const ReplayBuffer& history, const PrototypeBank& bank,
                                      const SpcConfig& config, const Eigen::Ref<const Vec>& f);

/// spc score * (1 + freq_weight * normalized decayed frequency at time t).
std::optional<ClassLabel> spc_pp_predict(const ReplayBuffer& history, const PrototypeBank& bank,
                                         const SpcConfig& config, const Eigen::Ref<const Vec>& f, int t);

/// Applies the frequency prior in place.
void apply_frequency_prior(ScoreVector& scores, const DecayedFrequency& freq, const SpcConfig& config, int t);

}  // namespace perfood
