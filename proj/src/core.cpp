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

#include "perfood/core.hpp"

#include <algorithm>
#include <cmath>

namespace perfood {

ClassLabel LabelDictionary::intern(std::string_view name) {
  auto it = ids_.find(std::string(name));
  if (it != ids_.end()) return it->second;
  ClassLabel label(static_cast<std::int32_t>(names_.size()));
  names_.emplace_back(name);
  ids_.emplace(names_.back(), label);
  return label;
}

std::optional<ClassLabel> LabelDictionary::find(std::string_view name) const {
  auto it = ids_.find(std::string(name));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

const std::string& LabelDictionary::name(ClassLabel label) const {
  if (!label.valid() || static_cast<std::size_t>(label.id()) >= names_.size())
    throw UsageError("unknown class label id " + std::to_string(label.id()));
  return names_[static_cast<std::size_t>(label.id())];
}

void ConsumptionPattern::validate() const {
  const Eigen::Index d = dim();
  for (std::size_t i = 0; i < observations.size(); ++i) {
    const auto& obs = observations[i];
    if (obs.time != static_cast<int>(i) + 1)
      throw DataError("pattern '" + pattern_id + "': expected t=" + std::to_string(i + 1) +
                      ", got t=" + std::to_string(obs.time));
    if (obs.feature.size() != d)
      throw DataError("pattern '" + pattern_id + "': feature dimension mismatch at t=" +
                      std::to_string(obs.time));
    if (!obs.label.valid())
      throw DataError("pattern '" + pattern_id + "': missing label at t=" + std::to_string(obs.time));
    check_feature(obs.feature);
  }
}

std::optional<double> ScoreVector::find(ClassLabel label) const {
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == label) return values[i];
  return std::nullopt;
}

double ScoreVector::at(ClassLabel label) const {
  auto v = find(label);
  if (!v) throw UsageError("class label not present in score vector");
  return *v;
}

double cosine_similarity(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b) {
  if (a.size() != b.size())
    throw UsageError("cosine_similarity: dimension mismatch (" + std::to_string(a.size()) + " vs " +
                     std::to_string(b.size()) + ")");
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) throw NumericalError("cosine_similarity: zero-norm feature");
  return std::clamp(a.dot(b) / (na * nb), -1.0, 1.0);
}

ScoreVector softmax(const ScoreVector& v) {
  if (v.empty()) throw UsageError("softmax: empty score vector");
  const double mx = *std::max_element(v.values.begin(), v.values.end());
  if (!std::isfinite(mx)) throw NumericalError("softmax: non-finite score");
  ScoreVector out;
  out.labels = v.labels;
  out.values.resize(v.values.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < v.values.size(); ++i) {
    if (!std::isfinite(v.values[i])) throw NumericalError("softmax: non-finite score");
    out.values[i] = std::exp(v.values[i] - mx);
    sum += out.values[i];
  }
  for (double& x : out.values) x /= sum;
  return out;
}

Vec l2_normalize(const Eigen::Ref<const Vec>& v) {
  const double n = v.norm();
  if (n == 0.0) throw NumericalError("l2_normalize: zero vector");
  if (!std::isfinite(n)) throw NumericalError("l2_normalize: non-finite vector");
  return v / n;
}

void check_feature(const Eigen::Ref<const Vec>& v) {
  if (v.size() == 0) throw DataError("empty feature vector");
  if (!v.allFinite()) throw DataError("feature vector has non-finite entries");
  if (v.squaredNorm() == 0.0) throw DataError("zero-norm feature vector");
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t hash_string(std::string_view s, std::uint64_t seed) {
  // FNV-1a, then mixed.
  std::uint64_t h = 0xcbf29ce484222325ULL ^ splitmix64(seed);
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(h);
}

Rng derive_rng(std::uint64_t seed, std::uint64_t stream) {
  const std::uint64_t a = splitmix64(seed);
  const std::uint64_t b = splitmix64(a ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  return Rng(seq);
}

}  // namespace perfood
