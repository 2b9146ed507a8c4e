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

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include <Eigen/Dense>

namespace perfood {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using Rng = std::mt19937_64;

// Error hierarchy. The C API maps each kind onto a status code.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent input data (bad features, broken time order, IO).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Degenerate numerics: zero-norm embeddings, non-finite gradients.
class NumericalError : public Error {
 public:
  using Error::Error;
};

/// Opaque class identifier. Compares by equality only.
class ClassLabel {
 public:
  constexpr ClassLabel() = default;
  constexpr explicit ClassLabel(std::int32_t id) : id_(id) {}

  constexpr std::int32_t id() const { return id_; }
  constexpr bool valid() const { return id_ >= 0; }

  friend constexpr bool operator==(ClassLabel a, ClassLabel b) { return a.id_ == b.id_; }

 private:
  std::int32_t id_ = -1;
};

struct ClassLabelHash {
  std::size_t operator()(ClassLabel c) const noexcept { return std::hash<std::int32_t>{}(c.id()); }
};

template <typename T>
using LabelMap = std::unordered_map<ClassLabel, T, ClassLabelHash>;

/// Interns external string labels into dense ClassLabel ids.
class LabelDictionary {
 public:
  ClassLabel intern(std::string_view name);
  std::optional<ClassLabel> find(std::string_view name) const;
  const std::string& name(ClassLabel label) const;
  std::size_t size() const { return names_.size(); }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::vector<std::string> names_;
  std::unordered_map<std::string, ClassLabel> ids_;
};

struct LabeledObservation {
  int time = 0;  // 1-based
  Vec feature;
  ClassLabel label;
};

struct ConsumptionPattern {
  std::string pattern_id;
  std::vector<LabeledObservation> observations;

  std::size_t size() const { return observations.size(); }
  Eigen::Index dim() const { return observations.empty() ? 0 : observations.front().feature.size(); }

  // Throws DataError unless times are 1..len, dims agree and features are usable.
  void validate() const;
};

/// Per-class scores, keyed by the classes seen so far in first-appearance order.
struct ScoreVector {
  std::vector<ClassLabel> labels;
  std::vector<double> values;

  std::size_t size() const { return labels.size(); }
  bool empty() const { return labels.empty(); }
  std::optional<double> find(ClassLabel label) const;
  double at(ClassLabel label) const;
  void push(ClassLabel label, double value) {
    labels.push_back(label);
    values.push_back(value);
  }
};

double cosine_similarity(const Eigen::Ref<const Vec>& a, const Eigen::Ref<const Vec>& b);
ScoreVector softmax(const ScoreVector& v);
Vec l2_normalize(const Eigen::Ref<const Vec>& v);

// Rejects non-finite or zero-norm features at ingestion.
void check_feature(const Eigen::Ref<const Vec>& v);

// Stable 64-bit mixing used to derive independent RNG streams.
std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t hash_string(std::string_view s, std::uint64_t seed = 0);
Rng derive_rng(std::uint64_t seed, std::uint64_t stream);

}  // namespace perfood
