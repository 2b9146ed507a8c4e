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

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "perfood/config.hpp"
#include "perfood/io.hpp"

using namespace perfood;

namespace {

Benchmark small_benchmark() {
  SimConfig config = SimConfig::vfn();
  config.num_patterns = 2;
  config.pattern_length = 12;
  config.feature_dim = 8;
  config.seed = 4;
  config.class_pool_size = 10;
  config.classes_per_pattern_target = 5;
  config.prototype_separation = 0.2;
  config.style_dim = 2;
  return make_benchmark(config);
}

std::filesystem::path scratch(const char* name) {
  const auto dir = std::filesystem::temp_directory_path() / "perfood_config_io";
  std::filesystem::create_directories(dir);
  return dir / name;
}

}  // namespace

TEST_SUITE("config_io") {

TEST_CASE("hyperparameters from json") {
  const Json j = parse_config(R"({"window": {"k": 3, "alpha": 0.01, "t_min": 10},
                                  "adaptation": {"lr": 0.05, "activation": "identity", "residual": false},
                                  "spc": {"mix_weight": 0.6}, "checkpoints": [10, 20]})");
  const HyperParams hp = hyperparams_from_json(j);
  CHECK(hp.window.k == 3);
  CHECK(hp.window.alpha == 0.01);
  CHECK(hp.adaptation.optim.learning_rate == 0.05);
  CHECK(hp.adaptation.activation == Activation::Identity);
  CHECK_FALSE(hp.adaptation.residual);
  CHECK(hp.spc.mix_weight == 0.6);
  CHECK(hp.checkpoints == std::vector<int>{10, 20});
}

TEST_CASE("defaults survive an empty config") {
  const HyperParams hp = hyperparams_from_json(parse_config("{}"));
  CHECK(hp.window.k == 5);
  CHECK(hp.window.alpha == 0.0025);
  CHECK(hp.window.t_min == 50);
  CHECK(hp.checkpoints == std::vector<int>{75, 150, 225, 300});
}

TEST_CASE("bad configs are usage errors") {
  CHECK_THROWS_AS(parse_config("[1, 2]"), UsageError);
  CHECK_THROWS_AS(parse_config("{oops"), UsageError);
  CHECK_THROWS_AS(hyperparams_from_json(parse_config(R"({"window": {"size": 3}})")), UsageError);
  CHECK_THROWS_AS(hyperparams_from_json(parse_config(R"({"colour": 1})")), UsageError);
  CHECK_THROWS_AS(hyperparams_from_json(parse_config(R"({"window": {"k": "five"}})")), UsageError);
  CHECK_THROWS_AS(hyperparams_from_json(parse_config(R"({"window": {"alpha": 2}})")), UsageError);
  CHECK_THROWS_AS(hyperparams_from_json(parse_config(R"({"checkpoints": [20, 10]})")), UsageError);
  CHECK_THROWS_AS(load_config_file(scratch("absent.json")), UsageError);
}

TEST_CASE("assignments and merging") {
  CHECK(parse_assignment("window.alpha=0") == Json::parse(R"({"window": {"alpha": 0}})"));
  CHECK(parse_assignment("adaptation.activation=relu") == Json::parse(R"({"adaptation": {"activation": "relu"}})"));
  CHECK(parse_assignment("checkpoints=[5,10]")["checkpoints"].size() == 2);
  CHECK_THROWS_AS(parse_assignment("novalue"), UsageError);
  CHECK_THROWS_AS(parse_assignment("a..b=1"), UsageError);
  Json base = parse_config(R"({"window": {"k": 3, "alpha": 0.5}})");
  merge_config(base, parse_assignment("window.alpha=0.1"));
  CHECK(base["window"]["k"] == 3);
  CHECK(base["window"]["alpha"] == 0.1);
}

TEST_CASE("config file named by the environment") {
  const auto path = scratch("env.json");
  std::ofstream(path) << R"({"spc": {"freq_weight": 0.25}})";
  ::setenv(kConfigEnvVar, path.c_str(), 1);
  const auto found = config_path_from_env();
  REQUIRE(found.has_value());
  CHECK(hyperparams_from_json(load_config_file(*found)).spc.freq_weight == 0.25);
  ::setenv(kConfigEnvVar, "", 1);
  CHECK_FALSE(config_path_from_env().has_value());
  ::unsetenv(kConfigEnvVar);
}

TEST_CASE("serialized settings round-trip") {
  HyperParams hp;
  hp.window.alpha = 0.125;
  hp.adaptation.batch.batch_size = 7;
  hp.checkpoints = {3, 9};
  const HyperParams back = hyperparams_from_json(to_json(hp));
  CHECK(back.window.alpha == 0.125);
  CHECK(back.adaptation.batch.batch_size == 7);
  CHECK(back.checkpoints == hp.checkpoints);

  SimConfig sim = SimConfig::vfn();
  sim.seed = 123456789012345ULL;
  sim.twin_fraction = 0.1;
  const SimConfig s2 = sim_config_from_manifest(to_json(sim));
  CHECK(s2.seed == sim.seed);
  CHECK(s2.shape == "vfn");
  CHECK(s2.twin_fraction == 0.1);
  CHECK(to_json(s2) == to_json(sim));
  CHECK_THROWS_AS(sim_config_from_manifest(Json::parse(R"({"seed": 1})")), DataError);
  CHECK(sim_config_from_json(parse_config(R"({"sim": {"num_patterns": 4}})"), sim).num_patterns == 4);
  CHECK_THROWS_AS(sim_config_from_json(parse_config(R"({"sim": {"patterns": 4}})"), sim), UsageError);
}

TEST_CASE("manifest path") {
  CHECK(manifest_path("x/bench.jsonl") == std::filesystem::path("x/bench.manifest.json"));
  CHECK(manifest_path("plain") == std::filesystem::path("plain.manifest.json"));
}

TEST_CASE("benchmark files round-trip") {
  const Benchmark b = small_benchmark();
  const auto path = scratch("bench.jsonl");
  write_benchmark(b, path);
  CHECK(std::filesystem::exists(manifest_path(path)));
  const Benchmark r = read_benchmark(path);
  REQUIRE(r.patterns.size() == b.patterns.size());
  for (std::size_t i = 0; i < b.patterns.size(); ++i) {
    CHECK(r.patterns[i].pattern_id == b.patterns[i].pattern_id);
    for (std::size_t t = 0; t < b.patterns[i].size(); ++t) {
      const auto& x = b.patterns[i].observations[t];
      const auto& y = r.patterns[i].observations[t];
      CHECK(y.feature == x.feature);
      CHECK(r.labels.name(y.label) == b.labels.name(x.label));
      CHECK(y.time == x.time);
    }
  }
  REQUIRE(r.config.has_value());
  CHECK(to_json(*r.config) == to_json(*b.config));
  REQUIRE(r.bank.size() == b.bank.size());
  CHECK((r.bank.prototypes() - b.bank.prototypes()).norm() == 0.0);
  CHECK(format_benchmark_jsonl(r) == format_benchmark_jsonl(b));
}

TEST_CASE("features without a manifest get a derived bank") {
  const Benchmark b = small_benchmark();
  const auto path = scratch("bare.jsonl");
  { std::ofstream(path) << format_benchmark_jsonl(b); }
  std::filesystem::remove(manifest_path(path));
  const Benchmark r = read_benchmark(path, 3);
  CHECK_FALSE(r.config.has_value());
  CHECK_FALSE(r.bank.empty());
  const Benchmark again = read_benchmark(path, 3);
  CHECK(again.bank.prototypes() == r.bank.prototypes());
  CHECK(fallback_bank(r, 1.0, 0.0, 0).size() == r.labels.size());
}

TEST_CASE("malformed benchmark lines are data errors") {
  const char* cases[] = {
      "not json\n",
      R"({"pattern_id": "p", "t": 1, "label": "a"})" "\n",
      R"({"pattern_id": "p", "t": 2, "label": "a", "feature": [1, 0]})" "\n",
      R"({"pattern_id": "p", "t": 1, "label": "a", "feature": []})" "\n",
      R"({"pattern_id": "p", "t": 1, "label": "a", "feature": [0, 0]})" "\n",
      R"({"pattern_id": "p", "t": 1, "label": "a", "feature": [1, 0]})" "\n"
      R"({"pattern_id": "p", "t": 2, "label": "a", "feature": [1, 0, 0]})" "\n",
      R"({"pattern_id": "q", "t": 1, "label": "a", "feature": [1, 0]})" "\n"
      R"({"pattern_id": "p", "t": 1, "label": "a", "feature": [1, 0]})" "\n",
      "",
  };
  for (const char* text : cases) {
    CAPTURE(text);
    CHECK_THROWS_AS(parse_benchmark_jsonl(text), DataError);
  }
  CHECK_THROWS_AS(read_benchmark(scratch("nowhere.jsonl")), DataError);
  const Benchmark ok = parse_benchmark_jsonl(
      R"({"pattern_id": "p", "t": 1, "label": "a", "feature": [1, 0]})" "\n\n"
      R"({"pattern_id": "p", "t": 2, "label": "b", "feature": [0, 2]})" "\n");
  CHECK(ok.patterns.front().size() == 2);
  CHECK(ok.labels.size() == 2);
}

}  // TEST_SUITE
