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

// Consumption-pattern simulator.
//
// Label sequences come from a first-order, Laplace-smoothed Markov chain
// fitted to a short random seed sequence, with occasional injection of
// classes from the global pool. Features are drawn around per-class
// sub-cluster centers with isotropic Gaussian noise and unit-normalized.
//
// Sub-cluster centers are feature_scale * normalize(prototype + spread * u),
// where u is drawn from a low-dimensional "style" subspace shared by all
// classes. That shared intra-class variation is what a personal adapter can
// learn to discount. A share of classes comes in twin pairs with identical
// appearance, separable only through temporal context.

#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfood/baselines.hpp"
#include "perfood/core.hpp"

namespace perfood {

struct TransitionModel {
  std::vector<ClassLabel> classes;
  Mat matrix;  // row = current class, column = next class
  Vec initial;

  std::optional<std::size_t> index_of(ClassLabel label) const;
  void validate() const;
};

/// Transition counts + smoothing, rows renormalized; initial distribution
/// proportional to seed frequency + smoothing. Classes default to the distinct
/// seed classes in first-appearance order. Rows without any mass fall back to
/// the initial distribution.
TransitionModel build_transition(std::span<const ClassLabel> seed, double smoothing);
TransitionModel build_transition(std::span<const ClassLabel> seed, double smoothing,
                                 std::span<const ClassLabel> classes);

struct NoveltyInjection {
  double rate = 0.0;
  std::vector<ClassLabel> pool;
};

/// First label from `initial`, then successive rows. With injection, each step
/// after the first draws from `pool` with probability `rate`; a label outside
/// the model restarts from `initial`.
std::vector<ClassLabel> simulate_labels(const TransitionModel& model, int length, Rng& rng,
                                        const NoveltyInjection* injection = nullptr);

struct ClassFeatures {
  std::vector<Vec> sub_clusters;
  Vec cluster_weights;
  double noise_sigma = 0.1;
};

struct ClassFeatureModel {
  LabelMap<ClassFeatures> classes;

  void validate() const;
};

ConsumptionPattern synth_features(std::span<const ClassLabel> labels, const ClassFeatureModel& model, Rng& rng,
                                  std::string pattern_id = "p0");

struct SimConfig {
  std::string shape = "custom";
  int num_patterns = 20;
  int pattern_length = 300;
  int feature_dim = 64;
  double smoothing = 0.02;
  std::uint64_t seed = 0;
  int classes_per_pattern_target = 44;
  int sub_clusters_per_class = 3;
  double prototype_separation = 0.5;  // pairwise prototype cosine kept below 1 - separation
  int class_pool_size = 101;
  double noise_sigma = 0.02;
  double sub_cluster_spread = 1.25;
  double feature_scale = 3.0;  // norm of sub-cluster centers, in the same units as noise_sigma
  int style_dim = 6;  // > 0: sub-cluster offsets live in a shared subspace of this dimension
  double new_class_rate = 0.02;
  int seed_length_min = 15;
  int seed_length_max = 25;
  double seed_core_fraction = 0.5;
  double bank_coverage = 0.7;
  double bank_noise = 0.15;
  double twin_fraction = 0.3;  // share of classes that come in visually identical pairs

  static SimConfig food101();
  static SimConfig vfn();
  static SimConfig for_shape(std::string_view shape);
  void validate() const;
};

/// Class prototypes, sub-cluster centers and the generic prototype bank shared
/// by every pattern of a benchmark.
struct SimWorld {
  std::vector<ClassLabel> pool;
  std::vector<Vec> prototypes;
  ClassFeatureModel features;
  PrototypeBank bank;
};

SimWorld make_world(const SimConfig& config, LabelDictionary& labels);

struct Benchmark {
  std::optional<SimConfig> config;  // absent for externally ingested features
  LabelDictionary labels;
  std::vector<ConsumptionPattern> patterns;
  PrototypeBank bank;

  Eigen::Index dim() const { return patterns.empty() ? 0 : patterns.front().dim(); }
  void validate() const;
};

ConsumptionPattern make_pattern(const SimConfig& config, const SimWorld& world, std::size_t index);

/// Fully deterministic given config.seed.
Benchmark make_benchmark(const SimConfig& config);

std::size_t distinct_classes(const ConsumptionPattern& pattern);

}  // namespace perfood
