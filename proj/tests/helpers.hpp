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

#include <random>
#include <vector>

#include "perfood/core.hpp"
#include "perfood/replay.hpp"

namespace testing {

inline perfood::Vec random_vec(Eigen::Index d, perfood::Rng& rng, double sigma = 1.0) {
  std::normal_distribution<double> normal(0.0, sigma);
  perfood::Vec v(d);
  for (Eigen::Index i = 0; i < d; ++i) v[i] = normal(rng);
  return v;
}

inline perfood::Vec random_unit(Eigen::Index d, perfood::Rng& rng) { return perfood::l2_normalize(random_vec(d, rng)); }

inline perfood::Vec vec(std::initializer_list<double> xs) {
  perfood::Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v[i++] = x;
  return v;
}

inline perfood::ScoreVector scores(std::initializer_list<double> xs) {
  perfood::ScoreVector s;
  std::int32_t id = 0;
  for (double x : xs) s.push(perfood::ClassLabel(id++), x);
  return s;
}

// A buffer of `labels.size()` random unit features.
inline perfood::ReplayBuffer make_buffer(const std::vector<int>& labels, Eigen::Index d, perfood::Rng& rng) {
  perfood::ReplayBuffer b;
  int t = 0;
  for (int c : labels) b.push({++t, random_unit(d, rng), perfood::ClassLabel(c)});
  return b;
}

}  // namespace testing
