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

#include <span>
#include <vector>

#include "perfood/core.hpp"

namespace perfood {

/// Every labeled observation of one pattern, in arrival order, with a
/// per-class position index.
class ReplayBuffer {
 public:
  // Throws DataError unless obs.time continues the sequence (1 for an empty buffer).
  void push(LabeledObservation obs);

  std::size_t size() const { return items_.size(); }
  bool empty() const { return items_.empty(); }
  const LabeledObservation& operator[](std::size_t i) const { return items_[i]; }
  const std::vector<LabeledObservation>& items() const { return items_; }

  /// Distinct classes in order of first appearance.
  const std::vector<ClassLabel>& classes() const { return classes_; }
  std::span<const std::size_t> positions(ClassLabel label) const;
  bool contains(ClassLabel label) const { return index_.count(label) != 0; }

 private:
  std::vector<LabeledObservation> items_;
  std::vector<ClassLabel> classes_;
  LabelMap<std::vector<std::size_t>> index_;
};

struct FeaturePair {
  Vec first;
  Vec second;
  ClassLabel label;
};

enum class SamplingMode { None, RS, DIL, RSDIL };

struct BatchSpec {
  int batch_size = 32;
  SamplingMode mode = SamplingMode::RSDIL;
  double jitter_sigma = 0.05;

  void validate() const;
};

/// feature + N(0, sigma^2 I), renormalized; an exact copy when sigma == 0.
Vec jitter(const Vec& feature, double sigma, Rng& rng);

/// Random Sampling: items drawn uniformly with replacement, each paired with a
/// jittered copy of itself.
std::vector<FeaturePair> sample_rs(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng);

/// Dual Instance Learning: classes drawn uniformly with replacement; each draw
/// yields two distinct stored features of that class (self-pair with jitter
/// for singleton classes).
std::vector<FeaturePair> sample_dil(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng);

/// RS+DIL: anchors drawn uniformly over all stored items as in RS, each
/// paired with a distinct item of the same class as in DIL (self-pair with
/// jitter for singleton classes).
std::vector<FeaturePair> sample_rs_dil(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng);

std::vector<FeaturePair> sample_batch(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng);

// Portable draws (independent of the standard library's distribution code).
double uniform01(Rng& rng);
std::size_t uniform_index(Rng& rng, std::size_t n);
std::size_t sample_categorical(std::span<const double> weights, Rng& rng);

}  // namespace perfood
