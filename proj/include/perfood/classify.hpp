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

// Personalized sliding-window classifier.
//
// For a query f_N with history (f_1, c_1) .. (f_{N-1}, c_{N-1}):
//
//   s^b_m   = max over t with c_t = m of cos(g(f_t), g(f_N))
//   s^w_m   = max over windows W_i labeled m of cos(W_i, W_query)
//   R_m     = softmax(s^b)_m * softmax(s^w)_m ^ alpha
//   p_N     = argmax_m R_m
//
// where g is the (continually updated) feature adapter and W_i is the
// concatenation of k consecutive embedded features labeled by its last
// element. Windows are only consulted once N >= t_min.

#pragma once

#include <optional>
#include <span>
#include <vector>

#include "perfood/adapt.hpp"
#include "perfood/core.hpp"
#include "perfood/replay.hpp"

namespace perfood {

struct WindowConfig {
  int k = 5;
  double alpha = 0.0025;
  int t_min = 50;
  bool enabled = true;  // false: single-image scores only

  void validate() const;
};

struct AdaptationConfig {
  BatchSpec batch;  // batch.mode == None disables the adapter entirely (identity embedding)
  // A single d x d layer learns far slower per step than a deep backbone, so
  // the online rate is much larger than the optimizer's generic default.
  OptimConfig optim{.learning_rate = 0.2};
  int min_buffer = 8;
  int groups = 8;
  Activation activation = Activation::Relu;
  bool residual = true;
  double init_sigma = 0.01;

  bool enabled() const { return batch.mode != SamplingMode::None; }
  void validate() const;
};

/// Labeled history together with the adapter that embeds it. Embedded history
/// features are cached and re-derived whenever the adapter changes.
class AdaptiveEmbedding {
 public:
  AdaptiveEmbedding(Eigen::Index dim, AdaptationConfig config, std::uint64_t seed);

  Eigen::Index dim() const { return dim_; }
  const ReplayBuffer& history() const { return history_; }
  const AdaptationConfig& config() const { return config_; }
  /// Null when adaptation is disabled.
  const AdapterParams* adapter() const { return config_.enabled() ? &adapter_ : nullptr; }
  std::uint64_t version() const { return version_; }
  std::size_t updates() const { return updates_; }
  double last_loss() const { return last_loss_; }

  Vec project(const Eigen::Ref<const Vec>& f) const;
  Mat project_columns(const Mat& features) const;

  /// d x n, column t-1 holds the embedding of history item t.
  auto projected() const { return cache_.leftCols(static_cast<Eigen::Index>(history_.size())); }
  /// Squared norms of the cached embeddings.
  auto projected_sq_norms() const { return sq_norms_.head(static_cast<Eigen::Index>(history_.size())); }
  /// Index into history().classes() for every history item.
  std::span<const std::size_t> class_slots() const { return slots_; }
  std::optional<std::size_t> slot_of(ClassLabel label) const;

  /// Appends the observation, runs one adapter update when due, refreshes the cache.
  void observe(LabeledObservation obs);

 private:
  void append_column(const Vec& projected);
  void refresh();

  Eigen::Index dim_;
  AdaptationConfig config_;
  Rng rng_;
  ReplayBuffer history_;
  AdapterParams adapter_;
  Mat raw_;
  Mat cache_;
  Vec sq_norms_;
  std::vector<std::size_t> slots_;
  LabelMap<std::size_t> slot_lookup_;
  std::uint64_t version_ = 0;
  std::size_t updates_ = 0;
  double last_loss_ = 0.0;
};

struct Window {
  Vec concat;  // k * d
  ClassLabel label;
  int start = 0;  // 1-based time of the first element
};

struct PredictionRecord {
  int t = 0;
  std::optional<ClassLabel> predicted;
  ClassLabel truth;
  ScoreVector scores;  // final R (single-image scores when windows are inactive)
};

/// Raw per-class maxima with the time of the best-matching item (for recency tie-breaks).
struct ClassMaxima {
  ScoreVector scores;
  std::vector<int> best_time;
};

/// R_m = sb_m * sw_m^alpha, not renormalized. Key sets must match.
ScoreVector fuse(const ScoreVector& sb, const ScoreVector& sw, double alpha);

/// Argmax with ties broken toward the larger recency value.
std::optional<std::size_t> argmax_recent(std::span<const double> values, std::span<const int> recency);

class PersonalClassifier {
 public:
  PersonalClassifier(Eigen::Index dim, WindowConfig window, AdaptationConfig adaptation, std::uint64_t seed);

  const AdaptiveEmbedding& embedding() const { return embedding_; }
  const ReplayBuffer& history() const { return embedding_.history(); }
  const WindowConfig& window_config() const { return window_; }

  /// s^b before softmax, with best-match times.
  ClassMaxima single_image_maxima(const Eigen::Ref<const Vec>& f) const;
  /// s^{b'}: softmax of the per-class maximum cosine.
  ScoreVector single_image_scores(const Eigen::Ref<const Vec>& f) const;

  std::vector<Window> build_windows() const;
  /// s^w before softmax; classes without a candidate window get the minimum candidate score.
  ScoreVector raw_window_scores(const Eigen::Ref<const Vec>& f) const;
  /// s^{w'}.
  ScoreVector window_scores(const Eigen::Ref<const Vec>& f) const;

  bool windows_active() const;
  /// Prediction for the next time step; `truth` is left unset.
  PredictionRecord predict(const Eigen::Ref<const Vec>& f) const;
  void observe(const Eigen::Ref<const Vec>& f, ClassLabel label);

 private:
  WindowConfig window_;
  AdaptiveEmbedding embedding_;
};

}  // namespace perfood
