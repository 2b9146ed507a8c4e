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

// Sequential evaluation protocol.
//
// Every pattern is replayed one observation at a time: the classifier
// predicts the incoming feature, the prediction is recorded, and only then is
// the true label revealed for a single online update. Accuracy is the running
// fraction of correct predictions, C(t) = (1/t) * sum_{tau <= t} [p_tau == c_tau].

#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "perfood/baselines.hpp"
#include "perfood/classify.hpp"
#include "perfood/simgen.hpp"

namespace perfood {

enum class ClassifierKind { Ours, SpcPP, Spc, OneNN, Svmil, Static };

struct MethodSpec {
  std::string name;
  ClassifierKind kind = ClassifierKind::Ours;
  SamplingMode sampling = SamplingMode::None;
  bool window = false;
  std::optional<LossKind> loss;  // set iff sampling != None

  /// Accepts the method names of the comparison: STATIC (CNN), SVMIL, 1-NN, SPC, SPC++,
  /// {RS,DIL,RS+DIL}+SPC++, {RS,DIL,RS+DIL}+SW, RS, DIL, RS+DIL, SW, OURS.
  /// An optional "@simsiam" / "@barlow" suffix selects the loss.
  static MethodSpec parse(std::string_view name, LossKind backbone = LossKind::SimSiam);
  void validate() const;
};

std::vector<MethodSpec> parse_method_list(std::string_view csv, LossKind backbone = LossKind::SimSiam);

/// The sampling / window ablation rows for one backbone.
std::vector<MethodSpec> ablation_methods(LossKind backbone);

struct HyperParams {
  WindowConfig window;
  AdaptationConfig adaptation;  // sampling mode and loss are taken from the method
  SpcConfig spc;
  double linear_learning_rate = 0.1;
  double linear_margin = 1.0;
  std::vector<int> checkpoints{75, 150, 225, 300};

  void validate() const;
};

/// What the protocol sees of a method: predict, then observe the truth.
class OnlineClassifier {
 public:
  virtual ~OnlineClassifier() = default;
  virtual std::optional<ClassLabel> predict(const Vec& feature, int t) = 0;
  virtual void observe(const Vec& feature, ClassLabel truth, int t) = 0;
};

std::unique_ptr<OnlineClassifier> make_classifier(const MethodSpec& method, const HyperParams& hp,
                                                  const PrototypeBank& bank, Eigen::Index dim, std::uint64_t seed);

/// Fraction of correct predictions among the first t records (NONE counts as wrong).
double cumulative_accuracy(std::span<const PredictionRecord> records, int t);

struct MetricSeries {
  std::string pattern_id;
  std::vector<PredictionRecord> records;  // scores dropped
  std::vector<double> accuracy;           // C(1) .. C(T)

  double at(int t) const;
};

/// Runs the protocol over one pattern. `records` carry t, prediction and truth.
MetricSeries run_protocol(OnlineClassifier& classifier, const ConsumptionPattern& pattern);

/// Seed for one (method, pattern) run, derived from the global seed.
std::uint64_t run_seed(std::uint64_t seed, std::string_view method, std::string_view pattern_id);

MetricSeries run_pattern(const MethodSpec& method, const HyperParams& hp, const PrototypeBank& bank,
                         const ConsumptionPattern& pattern, std::uint64_t seed);

struct ReportRow {
  std::string method;
  std::vector<double> mean;  // one per checkpoint
  std::vector<double> std;   // population std across patterns
};

struct BenchmarkResult {
  std::vector<int> checkpoints;
  std::vector<ReportRow> rows;
  std::vector<std::string> methods;
  std::vector<std::vector<MetricSeries>> series;  // [method][pattern]
};

struct RunOptions {
  int threads = 1;  // <= 0: hardware concurrency
};

BenchmarkResult run_benchmark(std::span<const MethodSpec> methods, const HyperParams& hp, const Benchmark& benchmark,
                              std::uint64_t seed, const RunOptions& options = {});

/// mean +- std of C(t) at each checkpoint.
ReportRow aggregate(std::string method, std::span<const MetricSeries> series, std::span<const int> checkpoints);

enum class ReportFormat { Csv, Json };

std::string format_report(std::span<const ReportRow> rows, std::span<const int> checkpoints, ReportFormat format);
void export_report(std::span<const ReportRow> rows, std::span<const int> checkpoints, ReportFormat format,
                   const std::filesystem::path& path);
/// method,pattern_id,t,correct,accuracy: one line per step after the header.
std::string format_series(const BenchmarkResult& result);
void export_series(const BenchmarkResult& result, const std::filesystem::path& path);
/// report.csv, report.json and series.csv in `dir` (created if needed).
void export_all(const BenchmarkResult& result, const std::filesystem::path& dir);

/// Parses a report previously written with format_report(..., Json).
std::vector<ReportRow> parse_report_json(std::string_view text, std::vector<int>* checkpoints = nullptr);

}  // namespace perfood
