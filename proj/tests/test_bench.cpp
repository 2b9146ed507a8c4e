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

#include <filesystem>
#include <fstream>
#include <sstream>

#include "helpers.hpp"
#include "perfood/bench.hpp"

using namespace perfood;

namespace {

std::vector<PredictionRecord> records(const std::vector<std::optional<int>>& predicted, const std::vector<int>& truth) {
  std::vector<PredictionRecord> out;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    PredictionRecord r;
    r.t = static_cast<int>(i) + 1;
    if (predicted[i]) r.predicted = ClassLabel(*predicted[i]);
    r.truth = ClassLabel(truth[i]);
    out.push_back(r);
  }
  return out;
}

Benchmark tiny_benchmark(int patterns = 3, int length = 60, std::uint64_t seed = 2) {
  SimConfig config = SimConfig::food101();
  config.num_patterns = patterns;
  config.pattern_length = length;
  config.seed = seed;
  return make_benchmark(config);
}

HyperParams tiny_hp() {
  HyperParams hp;
  hp.checkpoints = {15, 30, 45, 60};
  hp.window.t_min = 20;
  return hp;
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("bench") {

TEST_CASE("cumulative accuracy by hand") {
  CHECK(cumulative_accuracy(records({0, 0, 1, 1}, {0, 1, 1, 1}), 4) == 0.75);
  CHECK(cumulative_accuracy(records({std::nullopt, std::nullopt}, {0, 1}), 2) == 0.0);
  CHECK(cumulative_accuracy(records({3, 4, 5}, {3, 4, 5}), 3) == 1.0);
  CHECK(cumulative_accuracy(records({0, 0, 1, 1}, {0, 1, 1, 1}), 2) == 0.5);
  const auto r = records({0}, {0});
  CHECK_THROWS_AS(cumulative_accuracy(r, 0), UsageError);
  CHECK_THROWS_AS(cumulative_accuracy(r, 2), UsageError);
}

TEST_CASE("method names") {
  const MethodSpec ours = MethodSpec::parse("OURS");
  CHECK(ours.kind == ClassifierKind::Ours);
  CHECK(ours.sampling == SamplingMode::RSDIL);
  CHECK(ours.window);
  CHECK(ours.loss == LossKind::SimSiam);
  const MethodSpec dil = MethodSpec::parse("DIL+SPC++@barlow");
  CHECK(dil.kind == ClassifierKind::SpcPP);
  CHECK(dil.sampling == SamplingMode::DIL);
  CHECK(dil.loss == LossKind::Barlow);
  CHECK(MethodSpec::parse("rs+sw").kind == ClassifierKind::Ours);
  CHECK_FALSE(MethodSpec::parse("1-NN").loss.has_value());
  CHECK(MethodSpec::parse("CNN").kind == ClassifierKind::Static);
  for (const char* bad : {"BOGUS", "RS+", "SW+SPC++", "RS+RS", "", "+SPC++"})
    CHECK_THROWS_AS(MethodSpec::parse(bad), UsageError);
  CHECK(parse_method_list(" OURS, SPC ,1-NN").size() == 3);
  CHECK_THROWS_AS(parse_method_list(" , "), UsageError);
  const auto rows = ablation_methods(LossKind::Barlow);
  CHECK(rows.size() == 6);
  for (const auto& m : rows) CHECK(m.loss == LossKind::Barlow);
}

TEST_CASE("the protocol reveals a label only after its prediction") {
  // A spy that tries to learn labels as early as possible and asserts what it
  // may know at each call.
  struct Spy final : OnlineClassifier {
    std::vector<int> seen_truth_times;
    std::vector<ClassLabel> seen_truths;
    std::vector<std::string> log;
    int violations = 0;
    std::optional<ClassLabel> predict(const Vec&, int t) override {
      log.push_back("p" + std::to_string(t));
      if (static_cast<int>(seen_truths.size()) != t - 1) ++violations;
      if (!seen_truth_times.empty() && seen_truth_times.back() >= t) ++violations;
      // Best possible cheat: repeat the most recent label it knows.
      if (seen_truths.empty()) return std::nullopt;
      return seen_truths.back();
    }
    void observe(const Vec&, ClassLabel truth, int t) override {
      log.push_back("o" + std::to_string(t));
      seen_truth_times.push_back(t);
      seen_truths.push_back(truth);
    }
  };
  const Benchmark b = tiny_benchmark(1, 50);
  const ConsumptionPattern& p = b.patterns.front();
  Spy spy;
  const MetricSeries s = run_protocol(spy, p);
  CHECK(spy.violations == 0);
  REQUIRE(spy.log.size() == 100);
  for (std::size_t t = 1; t <= 50; ++t) {
    CHECK(spy.log[2 * t - 2] == "p" + std::to_string(t));
    CHECK(spy.log[2 * t - 1] == "o" + std::to_string(t));
  }
  // Its recorded predictions are exactly the previous labels.
  int correct = 0;
  for (std::size_t t = 0; t < p.size(); ++t) {
    if (t == 0) {
      CHECK_FALSE(s.records[t].predicted.has_value());
    } else {
      CHECK(s.records[t].predicted == p.observations[t - 1].label);
      if (p.observations[t - 1].label == p.observations[t].label) ++correct;
    }
  }
  CHECK(s.accuracy.back() == doctest::Approx(static_cast<double>(correct) / 50.0).epsilon(1e-15));
}

TEST_CASE("a classifier that changes its mind after the reveal does not change the record") {
  struct Flipper final : OnlineClassifier {
    std::optional<ClassLabel> last;
    std::optional<ClassLabel> predict(const Vec&, int) override { return last = ClassLabel(-7); }
    void observe(const Vec&, ClassLabel truth, int) override { last = truth; }
  };
  const Benchmark b = tiny_benchmark(1, 20);
  Flipper f;
  const MetricSeries s = run_protocol(f, b.patterns.front());
  for (const auto& r : s.records) CHECK(r.predicted == ClassLabel(-7));
  CHECK(s.accuracy.back() == 0.0);
}

TEST_CASE("series telescopes") {
  const Benchmark b = tiny_benchmark(2, 60);
  for (const char* name : {"OURS", "1-NN", "SPC++", "STATIC", "SVMIL"}) {
    const MetricSeries s = run_pattern(MethodSpec::parse(name), tiny_hp(), b.bank, b.patterns[0], 1);
    REQUIRE(s.accuracy.size() == 60);
    for (int t = 1; t <= 60; ++t) {
      CHECK(s.at(t) == doctest::Approx(cumulative_accuracy(s.records, t)).epsilon(1e-15));
      const double step = s.at(t) * t - (t > 1 ? s.at(t - 1) * (t - 1) : 0.0);
      CHECK((std::abs(step) < 1e-9 || std::abs(step - 1.0) < 1e-9));
    }
    CHECK_THROWS_AS(s.at(61), DataError);
  }
}

TEST_CASE("runs are reproducible") {
  const Benchmark b = tiny_benchmark(1, 60);
  const MethodSpec m = MethodSpec::parse("OURS");
  const MetricSeries a = run_pattern(m, tiny_hp(), b.bank, b.patterns[0], 3);
  const MetricSeries c = run_pattern(m, tiny_hp(), b.bank, b.patterns[0], 3);
  CHECK(a.accuracy == c.accuracy);
  CHECK(run_seed(3, "OURS", "p00") != run_seed(3, "SPC", "p00"));
  CHECK(run_seed(3, "OURS", "p00") != run_seed(3, "OURS", "p01"));
}

TEST_CASE("static classifier does not learn") {
  const Benchmark b = tiny_benchmark(1, 60);
  const MetricSeries s = run_pattern(MethodSpec::parse("STATIC"), tiny_hp(), b.bank, b.patterns[0], 0);
  for (std::size_t t = 0; t < 60; ++t)
    CHECK(s.records[t].predicted == static_predict(b.bank, b.patterns[0].observations[t].feature));
}

TEST_CASE("nearest neighbor on noiseless data misses only first occurrences") {
  SimConfig config = SimConfig::food101();
  config.num_patterns = 1;
  config.pattern_length = 150;
  config.noise_sigma = 1e-9;
  config.sub_clusters_per_class = 1;
  config.twin_fraction = 0.0;
  const Benchmark b = make_benchmark(config);
  const ConsumptionPattern& p = b.patterns[0];
  HyperParams hp;
  hp.checkpoints = {150};
  const MetricSeries s = run_pattern(MethodSpec::parse("1-NN"), hp, b.bank, p, 0);
  CHECK(s.at(150) == doctest::Approx(1.0 - static_cast<double>(distinct_classes(p)) / 150.0).epsilon(1e-12));
}

TEST_CASE("benchmark aggregation") {
  const Benchmark one = tiny_benchmark(1, 60);
  const std::vector<MethodSpec> twice{MethodSpec::parse("SPC"), MethodSpec::parse("SPC")};
  const BenchmarkResult r = run_benchmark(twice, tiny_hp(), one, 0);
  REQUIRE(r.rows.size() == 2);
  for (double sd : r.rows[0].std) CHECK(sd == 0.0);
  CHECK(r.rows[0].mean == r.rows[1].mean);
  CHECK(r.rows[0].mean.size() == 4);

  const Benchmark three = tiny_benchmark(3, 60);
  const BenchmarkResult r3 = run_benchmark(std::vector{MethodSpec::parse("1-NN")}, tiny_hp(), three, 0);
  double sum = 0;
  for (const auto& s : r3.series[0]) sum += s.at(60);
  CHECK(r3.rows[0].mean.back() == doctest::Approx(sum / 3.0).epsilon(1e-15));
  HyperParams long_hp = tiny_hp();
  long_hp.checkpoints = {75};
  CHECK_THROWS_AS(run_benchmark(twice, long_hp, one, 0), DataError);
}

TEST_CASE("concurrent and serial runs produce identical reports") {
  const Benchmark b = tiny_benchmark(4, 60);
  const auto methods = parse_method_list("OURS,SPC++,SVMIL");
  const BenchmarkResult serial = run_benchmark(methods, tiny_hp(), b, 11, {.threads = 1});
  const BenchmarkResult parallel = run_benchmark(methods, tiny_hp(), b, 11, {.threads = 4});
  CHECK(format_report(serial.rows, serial.checkpoints, ReportFormat::Json) ==
        format_report(parallel.rows, parallel.checkpoints, ReportFormat::Json));
  CHECK(format_series(serial) == format_series(parallel));
}

TEST_CASE("report formats") {
  const std::vector<int> cps{75, 300};
  const std::vector<ReportRow> rows{{"OURS", {0.5, 0.625}, {0.1, 0.0}}};
  const std::string csv = format_report(rows, cps, ReportFormat::Csv);
  CHECK(csv == "method,t75_mean,t75_std,t300_mean,t300_std\nOURS,0.500000,0.100000,0.625000,0.000000\n");
  std::vector<int> back_cps;
  const auto back = parse_report_json(format_report(rows, cps, ReportFormat::Json), &back_cps);
  CHECK(back_cps == cps);
  REQUIRE(back.size() == 1);
  CHECK(back[0].method == "OURS");
  CHECK(back[0].mean == rows[0].mean);
  CHECK(back[0].std == rows[0].std);
  CHECK_THROWS_AS(format_report({}, cps, ReportFormat::Csv), UsageError);
  CHECK_THROWS_AS(parse_report_json("{", nullptr), DataError);
}

TEST_CASE("exported files") {
  const Benchmark b = tiny_benchmark(2, 60);
  const BenchmarkResult r = run_benchmark(parse_method_list("OURS,STATIC"), tiny_hp(), b, 0);
  const auto dir = std::filesystem::temp_directory_path() / "perfood_bench_export";
  std::filesystem::remove_all(dir);
  export_all(r, dir);
  const std::string series = slurp(dir / "series.csv");
  CHECK(std::count(series.begin(), series.end(), '\n') == 1 + 2 * 2 * 60);
  const std::string json = slurp(dir / "report.json");
  const auto rows = parse_report_json(json);
  CHECK(rows.size() == 2);
  CHECK(rows[1].mean == r.rows[1].mean);
  CHECK(slurp(dir / "report.csv") == format_report(r.rows, r.checkpoints, ReportFormat::Csv));
  std::filesystem::remove_all(dir);
}

}  // TEST_SUITE
