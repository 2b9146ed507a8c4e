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

#include <doctest.h>

#include <set>

#include "helpers.hpp"
#include "perfood/replay.hpp"

using namespace perfood;

namespace {

// Position of `f` in the buffer, by exact feature match.
std::optional<std::size_t> locate(const ReplayBuffer& b, const Vec& f) {
  for (std::size_t i = 0; i < b.size(); ++i)
    if (b[i].feature == f) return i;
  return std::nullopt;
}

}  // namespace

TEST_SUITE("replay") {

TEST_CASE("buffer indexes classes by first appearance") {
  Rng rng(1);
  const ReplayBuffer b = testing::make_buffer({4, 2, 4, 9, 2}, 3, rng);
  CHECK(b.size() == 5);
  CHECK(b.classes() == std::vector<ClassLabel>{ClassLabel(4), ClassLabel(2), ClassLabel(9)});
  const auto pos = b.positions(ClassLabel(2));
  CHECK(std::vector<std::size_t>(pos.begin(), pos.end()) == std::vector<std::size_t>{1, 4});
  CHECK(b.positions(ClassLabel(5)).empty());
  CHECK(b.contains(ClassLabel(9)));
}

TEST_CASE("buffer enforces consecutive time and dimension") {
  ReplayBuffer b;
  CHECK_THROWS_AS(b.push({2, testing::vec({1, 0}), ClassLabel(0)}), DataError);
  b.push({1, testing::vec({1, 0}), ClassLabel(0)});
  CHECK_THROWS_AS(b.push({3, testing::vec({1, 0}), ClassLabel(0)}), DataError);
  CHECK_THROWS_AS(b.push({2, testing::vec({1, 0, 0}), ClassLabel(0)}), DataError);
  CHECK_THROWS_AS(b.push({2, testing::vec({1, 0}), ClassLabel()}), DataError);
}

TEST_CASE("jitter") {
  Rng rng(2);
  const Vec f = testing::vec({0.6, 0.8});
  CHECK(jitter(f, 0.0, rng) == f);
  const Vec j = jitter(f, 0.05, rng);
  CHECK(std::abs(j.norm() - 1.0) < 1e-12);
  CHECK(j != f);
  CHECK(j.dot(f) > 0.9);
}

TEST_CASE("random sampling pairs an item with a jittered copy") {
  Rng rng(3);
  const ReplayBuffer b = testing::make_buffer({0, 1, 1, 2, 2, 2}, 4, rng);
  BatchSpec spec{16, SamplingMode::RS, 0.05};
  const auto batch = sample_rs(b, spec, rng);
  CHECK(batch.size() == 16);
  for (const auto& p : batch) {
    const auto i = locate(b, p.first);
    REQUIRE(i.has_value());
    CHECK(b[*i].label == p.label);
    CHECK(p.first.dot(p.second) > 0.8);
  }
}

TEST_CASE("dual instance sampling pairs distinct items of one class") {
  Rng rng(4);
  const ReplayBuffer b = testing::make_buffer({0, 1, 1, 2, 2, 2}, 4, rng);
  const auto batch = sample_dil(b, {64, SamplingMode::DIL, 0.05}, rng);
  for (const auto& p : batch) {
    const auto i = locate(b, p.first);
    REQUIRE(i.has_value());
    CHECK(b[*i].label == p.label);
    if (p.label == ClassLabel(0)) {
      CHECK_FALSE(locate(b, p.second).has_value());
    } else {
      const auto j = locate(b, p.second);
      REQUIRE(j.has_value());
      CHECK(*j != *i);
      CHECK(b[*j].label == p.label);
    }
  }
}

TEST_CASE("composed sampling pairs each anchor with a same-class partner") {
  Rng rng(5);
  const ReplayBuffer b = testing::make_buffer({0, 1, 1, 2, 2, 2, 3}, 4, rng);
  const auto batch = sample_rs_dil(b, {64, SamplingMode::RSDIL, 0.05}, rng);
  std::set<std::size_t> anchors;
  for (const auto& p : batch) {
    const auto i = locate(b, p.first);
    REQUIRE(i.has_value());
    anchors.insert(*i);
    const auto j = locate(b, p.second);
    if (b.positions(p.label).size() == 1) {
      CHECK_FALSE(j.has_value());
    } else {
      REQUIRE(j.has_value());
      CHECK(*j != *i);
      CHECK(b[*j].label == p.label);
    }
  }
  CHECK(anchors.size() > 4);
}

TEST_CASE("sampling dispatch and errors") {
  Rng rng(6);
  const ReplayBuffer b = testing::make_buffer({0, 0}, 2, rng);
  CHECK(sample_batch(b, {3, SamplingMode::DIL, 0.0}, rng).size() == 3);
  CHECK_THROWS_AS(sample_batch(b, {3, SamplingMode::None, 0.0}, rng), UsageError);
  CHECK_THROWS_AS(sample_rs(ReplayBuffer{}, {}, rng), UsageError);
  CHECK_THROWS_AS(sample_dil(b, {0, SamplingMode::DIL, 0.0}, rng), UsageError);
}

TEST_CASE("portable draws") {
  Rng rng(7);
  for (int i = 0; i < 1000; ++i) {
    const double u = uniform01(rng);
    CHECK((u >= 0.0 && u < 1.0));
    CHECK(uniform_index(rng, 3) < 3);
  }
  const std::vector<double> w{0.0, 2.0, 0.0};
  CHECK(sample_categorical(w, rng) == 1);
  CHECK_THROWS_AS(sample_categorical(std::vector<double>{0.0, 0.0}, rng), UsageError);
}

}  // TEST_SUITE
