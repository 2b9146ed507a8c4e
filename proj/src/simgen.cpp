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

#include "perfood/simgen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <unordered_set>

#include "perfood/replay.hpp"

namespace perfood {

namespace {

constexpr int kMaxPrototypeAttempts = 20000;

Vec gaussian(Eigen::Index d, Rng& rng) {
  std::normal_distribution<double> normal;
  Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

template <typename T>
void shuffle(std::vector<T>& v, Rng& rng) {
  for (std::size_t i = v.size(); i > 1; --i) std::swap(v[i - 1], v[uniform_index(rng, i)]);
}

std::string pattern_name(std::size_t index, std::size_t count) {
  const int width = std::max(2, static_cast<int>(std::to_string(count > 0 ? count - 1 : 0).size()));
  char buf[32];
  std::snprintf(buf, sizeof buf, "p%0*zu", width, index);
  return buf;
}

}  // namespace

// ---------------------------------------------------------------------------
// Transition model

std::optional<std::size_t> TransitionModel::index_of(ClassLabel label) const {
  for (std::size_t i = 0; i < classes.size(); ++i)
    if (classes[i] == label) return i;
  return std::nullopt;
}

void TransitionModel::validate() const {
  const auto m = static_cast<Eigen::Index>(classes.size());
  if (m == 0) throw DataError("transition model: no classes");
  if (matrix.rows() != m || matrix.cols() != m || initial.size() != m)
    throw DataError("transition model: shape mismatch");
  if ((matrix.array() < 0.0).any() || (initial.array() < 0.0).any())
    throw DataError("transition model: negative probability");
  for (Eigen::Index i = 0; i < m; ++i)
    if (std::abs(matrix.row(i).sum() - 1.0) > 1e-9) throw DataError("transition model: row not stochastic");
  if (std::abs(initial.sum() - 1.0) > 1e-9) throw DataError("transition model: initial not normalized");
}

TransitionModel build_transition(std::span<const ClassLabel> seed, double smoothing) {
  std::vector<ClassLabel> classes;
  for (ClassLabel c : seed)
    if (std::find(classes.begin(), classes.end(), c) == classes.end()) classes.push_back(c);
  return build_transition(seed, smoothing, classes);
}

TransitionModel build_transition(std::span<const ClassLabel> seed, double smoothing,
                                 std::span<const ClassLabel> classes) {
  if (seed.size() < 2) throw DataError("build_transition: seed sequence needs at least 2 labels");
  if (!(smoothing >= 0.0)) throw UsageError("build_transition: smoothing must be >= 0");
  TransitionModel tm;
  tm.classes.assign(classes.begin(), classes.end());
  LabelMap<Eigen::Index> idx;
  for (std::size_t i = 0; i < tm.classes.size(); ++i)
    if (!idx.emplace(tm.classes[i], static_cast<Eigen::Index>(i)).second)
      throw UsageError("build_transition: duplicate class in class list");
  auto at = [&](ClassLabel c) {
    auto it = idx.find(c);
    if (it == idx.end()) throw UsageError("build_transition: seed label missing from class list");
    return it->second;
  };

  const auto m = static_cast<Eigen::Index>(tm.classes.size());
  tm.matrix = Mat::Constant(m, m, smoothing);
  tm.initial = Vec::Constant(m, smoothing);
  for (std::size_t i = 0; i < seed.size(); ++i) {
    tm.initial[at(seed[i])] += 1.0;
    if (i + 1 < seed.size()) tm.matrix(at(seed[i]), at(seed[i + 1])) += 1.0;
  }
  tm.initial /= tm.initial.sum();
  for (Eigen::Index r = 0; r < m; ++r) {
    const double s = tm.matrix.row(r).sum();
    if (s > 0.0)
      tm.matrix.row(r) /= s;
    else
      tm.matrix.row(r) = tm.initial.transpose();
  }
  return tm;
}

std::vector<ClassLabel> simulate_labels(const TransitionModel& model, int length, Rng& rng,
                                        const NoveltyInjection* injection) {
  if (length < 1) throw UsageError("simulate_labels: length must be >= 1");
  model.validate();
  std::vector<ClassLabel> out;
  out.reserve(static_cast<std::size_t>(length));
  auto draw_row = [&](std::optional<std::size_t> row) {
    const Vec& w = row ? Vec(model.matrix.row(static_cast<Eigen::Index>(*row)).transpose()) : model.initial;
    return model.classes[sample_categorical(std::span<const double>(w.data(), static_cast<std::size_t>(w.size())), rng)];
  };
  out.push_back(draw_row(std::nullopt));
  for (int t = 1; t < length; ++t) {
    if (injection && !injection->pool.empty() && injection->rate > 0.0 && uniform01(rng) < injection->rate) {
      out.push_back(injection->pool[uniform_index(rng, injection->pool.size())]);
      continue;
    }
    out.push_back(draw_row(model.index_of(out.back())));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Features

void ClassFeatureModel::validate() const {
  std::optional<Eigen::Index> d;
  for (const auto& [label, cf] : classes) {
    if (cf.sub_clusters.empty()) throw DataError("class feature model: class without sub-clusters");
    if (cf.cluster_weights.size() != static_cast<Eigen::Index>(cf.sub_clusters.size()))
      throw DataError("class feature model: cluster weight count mismatch");
    if ((cf.cluster_weights.array() < 0.0).any() || std::abs(cf.cluster_weights.sum() - 1.0) > 1e-9)
      throw DataError("class feature model: cluster weights must be a probability vector");
    if (!(cf.noise_sigma > 0.0)) throw DataError("class feature model: noise_sigma must be > 0");
    for (const Vec& c : cf.sub_clusters) {
      if (!d) d = c.size();
      if (c.size() != *d) throw DataError("class feature model: dimension mismatch");
    }
  }
}

ConsumptionPattern synth_features(std::span<const ClassLabel> labels, const ClassFeatureModel& model, Rng& rng,
                                  std::string pattern_id) {
  ConsumptionPattern p;
  p.pattern_id = std::move(pattern_id);
  p.observations.reserve(labels.size());
  int t = 0;
  for (ClassLabel c : labels) {
    auto it = model.classes.find(c);
    if (it == model.classes.end())
      throw DataError("synth_features: label " + std::to_string(c.id()) + " has no feature model");
    const ClassFeatures& cf = it->second;
    const std::size_t k = sample_categorical(
        std::span<const double>(cf.cluster_weights.data(), static_cast<std::size_t>(cf.cluster_weights.size())), rng);
    const Vec& center = cf.sub_clusters[k];
    std::normal_distribution<double> normal(0.0, cf.noise_sigma);
    Vec f = center;
    for (Eigen::Index i = 0; i < f.size(); ++i) f[i] += normal(rng);
    p.observations.push_back({++t, l2_normalize(f), c});
  }
  return p;
}

// ---------------------------------------------------------------------------
// Benchmarks

SimConfig SimConfig::food101() {
  SimConfig c;
  c.shape = "food101";
  c.num_patterns = 20;
  c.class_pool_size = 101;
  c.classes_per_pattern_target = 44;
  return c;
}

SimConfig SimConfig::vfn() {
  SimConfig c;
  c.shape = "vfn";
  c.num_patterns = 26;
  c.class_pool_size = 74;
  c.classes_per_pattern_target = 29;
  return c;
}

SimConfig SimConfig::for_shape(std::string_view shape) {
  if (shape == "food101") return food101();
  if (shape == "vfn") return vfn();
  if (shape == "custom") return SimConfig{};
  throw UsageError("unknown benchmark shape '" + std::string(shape) + "' (expected food101, vfn or custom)");
}

void SimConfig::validate() const {
  if (num_patterns < 1) throw UsageError("num_patterns must be >= 1");
  if (pattern_length < 1) throw UsageError("pattern_length must be >= 1");
  if (feature_dim < 2) throw UsageError("feature_dim must be >= 2");
  if (!(smoothing >= 0.0)) throw UsageError("smoothing must be >= 0");
  if (class_pool_size < 1) throw UsageError("class_pool_size must be >= 1");
  if (classes_per_pattern_target < 1) throw UsageError("classes_per_pattern_target must be >= 1");
  if (sub_clusters_per_class < 1) throw UsageError("sub_clusters_per_class must be >= 1");
  if (!(prototype_separation >= 0.0 && prototype_separation < 2.0))
    throw UsageError("prototype_separation must lie in [0, 2)");
  if (!(noise_sigma > 0.0)) throw UsageError("noise_sigma must be > 0");
  if (!(sub_cluster_spread >= 0.0)) throw UsageError("sub_cluster_spread must be >= 0");
  if (!(feature_scale > 0.0)) throw UsageError("feature_scale must be > 0");
  if (style_dim < 0 || style_dim > feature_dim) throw UsageError("style_dim must lie in [0, feature_dim]");
  if (!(new_class_rate >= 0.0 && new_class_rate <= 1.0)) throw UsageError("new_class_rate must lie in [0, 1]");
  if (seed_length_min < 2 || seed_length_max < seed_length_min)
    throw UsageError("seed length range must satisfy 2 <= min <= max");
  if (!(seed_core_fraction > 0.0 && seed_core_fraction <= 1.0))
    throw UsageError("seed_core_fraction must lie in (0, 1]");
  if (!(bank_coverage > 0.0 && bank_coverage <= 1.0)) throw UsageError("bank_coverage must lie in (0, 1]");
  if (!(bank_noise >= 0.0)) throw UsageError("bank_noise must be >= 0");
  if (!(twin_fraction >= 0.0 && twin_fraction <= 1.0)) throw UsageError("twin_fraction must lie in [0, 1]");
}

SimWorld make_world(const SimConfig& config, LabelDictionary& labels) {
  config.validate();
  Rng rng = derive_rng(config.seed, 0);
  const Eigen::Index d = config.feature_dim;
  const double max_cos = 1.0 - config.prototype_separation;

  SimWorld world;
  for (int c = 0; c < config.class_pool_size; ++c) {
    char name[32];
    std::snprintf(name, sizeof name, "food_%03d", c);
    world.pool.push_back(labels.intern(name));
  }

  for (int c = 0; c < config.class_pool_size; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMaxPrototypeAttempts && !placed; ++attempt) {
      Vec v = l2_normalize(gaussian(d, rng));
      placed = std::all_of(world.prototypes.begin(), world.prototypes.end(),
                           [&](const Vec& p) { return p.dot(v) < max_cos; });
      if (placed) world.prototypes.push_back(std::move(v));
    }
    if (!placed)
      throw DataError("cannot place " + std::to_string(config.class_pool_size) +
                      " class prototypes with pairwise cosine < " + std::to_string(max_cos) + " in dimension " +
                      std::to_string(d));
  }

  // Look-alike classes: the second member of each twin pair takes over the
  // first one's prototype and, below, its sub-cluster centers, so only the
  // temporal context can tell the two apart.
  std::vector<std::pair<std::size_t, std::size_t>> twins;
  if (config.twin_fraction > 0.0) {
    Rng twin_rng = derive_rng(config.seed, 2);
    std::vector<std::size_t> order(world.pool.size());
    std::iota(order.begin(), order.end(), 0);
    shuffle(order, twin_rng);
    const auto pairs = static_cast<std::size_t>(config.twin_fraction * static_cast<double>(order.size()) / 2.0);
    for (std::size_t i = 0; i < pairs; ++i) {
      twins.emplace_back(order[2 * i], order[2 * i + 1]);
      world.prototypes[order[2 * i + 1]] = world.prototypes[order[2 * i]];
    }
  }

  // Shared "style" directions: intra-class variation that looks the same
  // across classes (cooking method, plating), orthonormal basis d x s.
  Mat style;
  if (config.style_dim > 0) {
    Mat g(d, config.style_dim);
    for (Eigen::Index j = 0; j < g.cols(); ++j) g.col(j) = gaussian(d, rng);
    style = Eigen::HouseholderQR<Mat>(g).householderQ() * Mat::Identity(d, config.style_dim);
  }

  for (std::size_t c = 0; c < world.pool.size(); ++c) {
    ClassFeatures cf;
    cf.noise_sigma = config.noise_sigma;
    for (int s = 0; s < config.sub_clusters_per_class; ++s) {
      Vec offset = config.style_dim > 0 ? Vec(style * l2_normalize(gaussian(config.style_dim, rng)))
                                        : l2_normalize(gaussian(d, rng));
      cf.sub_clusters.push_back(config.feature_scale *
                                l2_normalize(world.prototypes[c] + config.sub_cluster_spread * offset));
    }
    cf.cluster_weights = Vec::Constant(config.sub_clusters_per_class, 1.0 / config.sub_clusters_per_class);
    world.features.classes.emplace(world.pool[c], std::move(cf));
  }

  for (const auto& [a, b] : twins)
    world.features.classes.at(world.pool[b]).sub_clusters = world.features.classes.at(world.pool[a]).sub_clusters;

  // Bank noise is expressed in feature units, like noise_sigma.
  std::vector<Vec> scaled;
  scaled.reserve(world.prototypes.size());
  for (const Vec& p : world.prototypes) scaled.push_back(config.feature_scale * p);
  Rng bank_rng = derive_rng(config.seed, 1);
  world.bank = PrototypeBank::from_noisy_prototypes(world.pool, scaled, config.bank_coverage, config.bank_noise,
                                                    bank_rng);
  return world;
}

ConsumptionPattern make_pattern(const SimConfig& config, const SimWorld& world, std::size_t index) {
  Rng rng = derive_rng(config.seed, 1000 + index);

  // Personal class pool; the seed draws from a Zipf-weighted core of it.
  std::vector<ClassLabel> order = world.pool;
  shuffle(order, rng);
  const std::size_t personal_size =
      std::min(order.size(), static_cast<std::size_t>(config.classes_per_pattern_target));
  std::vector<ClassLabel> personal(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(personal_size));
  std::vector<ClassLabel> outside(order.begin() + static_cast<std::ptrdiff_t>(personal_size), order.end());

  const int seed_len = config.seed_length_min +
                       static_cast<int>(uniform_index(rng, static_cast<std::size_t>(config.seed_length_max -
                                                                                    config.seed_length_min + 1)));
  const std::size_t core = std::clamp<std::size_t>(
      static_cast<std::size_t>(std::lround(config.seed_core_fraction * seed_len)), 1, personal.size());
  std::vector<double> zipf(core);
  for (std::size_t i = 0; i < core; ++i) zipf[i] = 1.0 / static_cast<double>(i + 1);
  std::vector<ClassLabel> seed(static_cast<std::size_t>(seed_len));
  for (auto& c : seed) c = personal[sample_categorical(zipf, rng)];

  const TransitionModel tm = build_transition(seed, config.smoothing, personal);
  NoveltyInjection inj{config.new_class_rate, outside};
  const auto labels = simulate_labels(tm, config.pattern_length, rng, &inj);

  // Per-pattern sub-cluster preferences.
  ClassFeatureModel model = world.features;
  for (auto& [label, cf] : model.classes) {
    Vec w(cf.cluster_weights.size());
    for (Eigen::Index i = 0; i < w.size(); ++i) w[i] = 0.2 + uniform01(rng);
    cf.cluster_weights = w / w.sum();
  }
  return synth_features(labels, model, rng, pattern_name(index, static_cast<std::size_t>(config.num_patterns)));
}

Benchmark make_benchmark(const SimConfig& config) {
  Benchmark b;
  b.config = config;
  SimWorld world = make_world(config, b.labels);
  b.bank = std::move(world.bank);
  b.patterns.reserve(static_cast<std::size_t>(config.num_patterns));
  for (int p = 0; p < config.num_patterns; ++p)
    b.patterns.push_back(make_pattern(config, world, static_cast<std::size_t>(p)));
  return b;
}

void Benchmark::validate() const {
  if (patterns.empty()) throw DataError("benchmark has no patterns");
  const Eigen::Index d = dim();
  std::unordered_set<std::string> ids;
  for (const auto& p : patterns) {
    if (p.observations.empty()) throw DataError("pattern '" + p.pattern_id + "' is empty");
    if (!ids.insert(p.pattern_id).second) throw DataError("duplicate pattern id '" + p.pattern_id + "'");
    if (p.dim() != d) throw DataError("pattern '" + p.pattern_id + "' has a different feature dimension");
    p.validate();
  }
  if (!bank.empty() && bank.dim() != d) throw DataError("prototype bank dimension does not match features");
}

std::size_t distinct_classes(const ConsumptionPattern& pattern) {
  std::unordered_set<std::int32_t> seen;
  for (const auto& o : pattern.observations) seen.insert(o.label.id());
  return seen.size();
}

}  // namespace perfood
