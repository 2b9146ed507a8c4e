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

#include "perfood/replay.hpp"

#include <algorithm>
#include <cmath>

namespace perfood {

void ReplayBuffer::push(LabeledObservation obs) {
  const int expected = items_.empty() ? 1 : items_.back().time + 1;
  if (obs.time != expected)
    throw DataError("replay buffer: expected t=" + std::to_string(expected) + ", got t=" +
                    std::to_string(obs.time));
  if (!obs.label.valid()) throw DataError("replay buffer: invalid label");
  if (!items_.empty() && obs.feature.size() != items_.front().feature.size())
    throw DataError("replay buffer: feature dimension mismatch");
  auto [it, inserted] = index_.try_emplace(obs.label);
  if (inserted) classes_.push_back(obs.label);
  it->second.push_back(items_.size());
  items_.push_back(std::move(obs));
}

std::span<const std::size_t> ReplayBuffer::positions(ClassLabel label) const {
  auto it = index_.find(label);
  if (it == index_.end()) return {};
  return it->second;
}

void BatchSpec::validate() const {
  if (batch_size < 1) throw UsageError("batch_size must be >= 1");
  if (!(jitter_sigma >= 0.0)) throw UsageError("jitter_sigma must be >= 0");
}

double uniform01(Rng& rng) { return static_cast<double>(rng() >> 11) * 0x1.0p-53; }

std::size_t uniform_index(Rng& rng, std::size_t n) {
  // Lemire's nearly-divisionless bounded draw, 64-bit.
  const unsigned __int128 m = static_cast<unsigned __int128>(rng()) * n;
  std::uint64_t low = static_cast<std::uint64_t>(m);
  if (low < n) {
    const std::uint64_t threshold = (0 - static_cast<std::uint64_t>(n)) % n;
    unsigned __int128 mm = m;
    while (low < threshold) {
      mm = static_cast<unsigned __int128>(rng()) * n;
      low = static_cast<std::uint64_t>(mm);
    }
    return static_cast<std::size_t>(mm >> 64);
  }
  return static_cast<std::size_t>(m >> 64);
}

std::size_t sample_categorical(std::span<const double> weights, Rng& rng) {
  double total = 0.0;
  for (double w : weights) total += w;
  if (!(total > 0.0)) throw UsageError("sample_categorical: weights sum to zero");
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    acc += weights[i];
    last_positive = i;
    if (u < acc) return i;
  }
  return last_positive;
}

Vec jitter(const Vec& feature, double sigma, Rng& rng) {
  if (sigma == 0.0) return feature;
  std::normal_distribution<double> normal(0.0, sigma);
  Vec out = feature;
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] += normal(rng);
  return l2_normalize(out);
}

std::vector<FeaturePair> sample_rs(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng) {
  if (buffer.empty()) throw UsageError("sample_rs: empty buffer");
  spec.validate();
  std::vector<FeaturePair> batch;
  batch.reserve(static_cast<std::size_t>(spec.batch_size));
  for (int b = 0; b < spec.batch_size; ++b) {
    const auto& item = buffer[uniform_index(rng, buffer.size())];
    batch.push_back({item.feature, jitter(item.feature, spec.jitter_sigma, rng), item.label});
  }
  return batch;
}

std::vector<FeaturePair> sample_dil(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng) {
  if (buffer.empty()) throw UsageError("sample_dil: empty buffer");
  spec.validate();
  const auto& classes = buffer.classes();
  std::vector<FeaturePair> batch;
  batch.reserve(static_cast<std::size_t>(spec.batch_size));
  for (int b = 0; b < spec.batch_size; ++b) {
    const ClassLabel label = classes[uniform_index(rng, classes.size())];
    const auto pos = buffer.positions(label);
    if (pos.size() == 1) {
      const Vec& f = buffer[pos[0]].feature;
      batch.push_back({f, jitter(f, spec.jitter_sigma, rng), label});
      continue;
    }
    const std::size_t i = uniform_index(rng, pos.size());
    std::size_t j = uniform_index(rng, pos.size() - 1);
    if (j >= i) ++j;
    batch.push_back({buffer[pos[i]].feature, buffer[pos[j]].feature, label});
  }
  return batch;
}

std::vector<FeaturePair> sample_rs_dil(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng) {
  if (buffer.empty()) throw UsageError("sample_rs_dil: empty buffer");
  spec.validate();
  std::vector<FeaturePair> batch;
  batch.reserve(static_cast<std::size_t>(spec.batch_size));
  for (int b = 0; b < spec.batch_size; ++b) {
    const std::size_t a = uniform_index(rng, buffer.size());
    const auto& item = buffer[a];
    const auto pos = buffer.positions(item.label);
    if (pos.size() == 1) {
      batch.push_back({item.feature, jitter(item.feature, spec.jitter_sigma, rng), item.label});
      continue;
    }
    // Uniform over the class's other items: skip the anchor's own slot.
    const std::size_t own = static_cast<std::size_t>(std::lower_bound(pos.begin(), pos.end(), a) - pos.begin());
    std::size_t j = uniform_index(rng, pos.size() - 1);
    if (j >= own) ++j;
    batch.push_back({item.feature, buffer[pos[j]].feature, item.label});
  }
  return batch;
}

std::vector<FeaturePair> sample_batch(const ReplayBuffer& buffer, const BatchSpec& spec, Rng& rng) {
  switch (spec.mode) {
    case SamplingMode::RS:
      return sample_rs(buffer, spec, rng);
    case SamplingMode::DIL:
      return sample_dil(buffer, spec, rng);
    case SamplingMode::RSDIL:
      return sample_rs_dil(buffer, spec, rng);
    case SamplingMode::None:
      break;
  }
  throw UsageError("sample_batch: sampling mode is NONE");
}

}  // namespace perfood
