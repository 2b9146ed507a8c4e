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

#include "perfood/bench.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <fstream>
#include <mutex>
#include <sstream>
#include <thread>

#include <json.hpp>

namespace perfood {

namespace {

std::string upper(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  return out;
}

std::string shortest(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::string fixed6(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6f", v);
  return buf;
}

[[noreturn]] void rethrow_with_context(std::exception_ptr ep, const std::string& ctx) {
  try {
    std::rethrow_exception(ep);
  } catch (const UsageError& e) {
    throw UsageError(ctx + e.what());
  } catch (const DataError& e) {
    throw DataError(ctx + e.what());
  } catch (const NumericalError& e) {
    throw NumericalError(ctx + e.what());
  } catch (const std::exception& e) {
    throw Error(ctx + e.what());
  }
}

// ---------------------------------------------------------------------------
// Method adapters

class StaticMethod final : public OnlineClassifier {
 public:
  explicit StaticMethod(const PrototypeBank& bank) : bank_(bank) {
    if (bank_.empty()) throw UsageError("STATIC needs a non-empty prototype bank");
  }
  std::optional<ClassLabel> predict(const Vec& f, int) override { return static_predict(bank_, f); }
  void observe(const Vec&, ClassLabel, int) override {}

 private:
  const PrototypeBank& bank_;
};

class OneNNMethod final : public OnlineClassifier {
 public:
  std::optional<ClassLabel> predict(const Vec& f, int) override { return one_nn_predict(history_, f); }
  void observe(const Vec& f, ClassLabel truth, int t) override { history_.push({t, f, truth}); }

 private:
  ReplayBuffer history_;
};

class SvmilMethod final : public OnlineClassifier {
 public:
  SvmilMethod(Eigen::Index dim, double lr, double margin) : model_(dim, lr, margin) {}
  std::optional<ClassLabel> predict(const Vec& f, int) override { return model_.predict(f); }
  void observe(const Vec& f, ClassLabel truth, int) override { model_.update(f, truth); }

 private:
  OnlineLinearModel model_;
};

// SPC, SPC++ and the sampled-adapter SPC++ variants share one implementation.
// The personal nearest-neighbor term lives in the (possibly adapted)
// embedding; the generic prototype term stays on raw features, since it
// stands for a frozen pretrained model.
class SpcMethod final : public OnlineClassifier {
 public:
  SpcMethod(const PrototypeBank& bank, const SpcConfig& cfg, bool frequency_prior, Eigen::Index dim,
            AdaptationConfig adaptation, std::uint64_t seed)
      : bank_(bank), cfg_(cfg), prior_(frequency_prior), embedding_(dim, std::move(adaptation), seed),
        freq_(cfg.decay_halflife) {
    cfg_.validate();
    if (bank_.empty()) throw UsageError("SPC needs a non-empty prototype bank");
  }

  std::optional<ClassLabel> predict(const Vec& f, int t) override {
    const Vec q = embedding_.project(f);
    std::vector<int> times;
    ScoreVector s = spc_scores(embedding_.projected(), embedding_.class_slots(), embedding_.history().classes(),
                               bank_.prototypes(), bank_.labels(), cfg_, q, f, &times);
    if (prior_) apply_frequency_prior(s, freq_, cfg_, t);
    return s.labels[*argmax_recent(s.values, times)];
  }

  void observe(const Vec& f, ClassLabel truth, int t) override {
    embedding_.observe({t, f, truth});
    freq_.observe(truth, t);
  }

 private:
  const PrototypeBank& bank_;
  SpcConfig cfg_;
  bool prior_;
  AdaptiveEmbedding embedding_;
  DecayedFrequency freq_;
};

class OursMethod final : public OnlineClassifier {
 public:
  OursMethod(Eigen::Index dim, WindowConfig window, AdaptationConfig adaptation, std::uint64_t seed)
      : clf_(dim, window, std::move(adaptation), seed) {}
  std::optional<ClassLabel> predict(const Vec& f, int) override { return clf_.predict(f).predicted; }
  void observe(const Vec& f, ClassLabel truth, int) override { clf_.observe(f, truth); }

 private:
  PersonalClassifier clf_;
};

}  // namespace

// ---------------------------------------------------------------------------
// MethodSpec

MethodSpec MethodSpec::parse(std::string_view name, LossKind backbone) {
  MethodSpec m;
  m.name = std::string(name);
  std::string body(name);
  if (auto at = body.find('@'); at != std::string::npos) {
    backbone = parse_loss(body.substr(at + 1));
    body.resize(at);
  }
  const std::string u = upper(body);

  if (u == "STATIC" || u == "CNN") {
    m.kind = ClassifierKind::Static;
  } else if (u == "SVMIL") {
    m.kind = ClassifierKind::Svmil;
  } else if (u == "1-NN" || u == "1NN" || u == "ONE_NN") {
    m.kind = ClassifierKind::OneNN;
  } else if (u == "SPC") {
    m.kind = ClassifierKind::Spc;
  } else if (u == "OURS") {
    m.kind = ClassifierKind::Ours;
    m.sampling = SamplingMode::RSDIL;
    m.window = true;
  } else {
    // [RS][+DIL][+SW | +SPC++]
    std::string rest = u;
    bool spcpp = false;
    if (rest == "SPC++") {
      rest.clear();
      spcpp = true;
    } else if (rest.size() > 6 && rest.ends_with("+SPC++")) {
      rest.resize(rest.size() - 6);
      spcpp = true;
    }
    bool rs = false, dil = false, sw = false;
    std::stringstream ss(rest);
    for (std::string p; std::getline(ss, p, '+');) {
      if (p == "RS" && !rs) {
        rs = true;
      } else if (p == "DIL" && !dil) {
        dil = true;
      } else if (p == "SW" && !sw) {
        sw = true;
      } else {
        throw UsageError("unknown method '" + std::string(name) + "'");
      }
    }
    if (!rest.empty() && rest.back() == '+') throw UsageError("unknown method '" + std::string(name) + "'");
    if (sw && spcpp) throw UsageError("method '" + std::string(name) + "' combines SW with SPC++");
    m.sampling = rs && dil ? SamplingMode::RSDIL : rs ? SamplingMode::RS : dil ? SamplingMode::DIL : SamplingMode::None;
    if (spcpp) {
      m.kind = ClassifierKind::SpcPP;
    } else {
      if (!rs && !dil && !sw) throw UsageError("unknown method '" + std::string(name) + "'");
      m.kind = ClassifierKind::Ours;
      m.window = sw;
    }
  }
  if (m.sampling != SamplingMode::None) m.loss = backbone;
  return m;
}

void MethodSpec::validate() const {
  if (name.empty()) throw UsageError("method name is empty");
  const bool adaptive_kind = kind == ClassifierKind::Ours || kind == ClassifierKind::SpcPP;
  if (sampling != SamplingMode::None && !adaptive_kind)
    throw UsageError("method '" + name + "': sampling only applies to OURS and SPC++");
  if (window && kind != ClassifierKind::Ours) throw UsageError("method '" + name + "': window only applies to OURS");
  if ((sampling != SamplingMode::None) != loss.has_value())
    throw UsageError("method '" + name + "': a loss is required exactly when sampling is enabled");
}

std::vector<MethodSpec> parse_method_list(std::string_view csv, LossKind backbone) {
  std::vector<MethodSpec> out;
  std::stringstream ss{std::string(csv)};
  for (std::string item; std::getline(ss, item, ',');) {
    item.erase(0, item.find_first_not_of(" \t"));
    item.erase(item.find_last_not_of(" \t") + 1);
    if (item.empty()) continue;
    out.push_back(MethodSpec::parse(item, backbone));
  }
  if (out.empty()) throw UsageError("no methods given");
  return out;
}

std::vector<MethodSpec> ablation_methods(LossKind backbone) {
  std::vector<MethodSpec> out;
  for (const char* n : {"RS+SPC++", "DIL+SPC++", "RS+DIL+SPC++", "RS+SW", "DIL+SW", "RS+DIL+SW"})
    out.push_back(MethodSpec::parse(n, backbone));
  return out;
}

void HyperParams::validate() const {
  window.validate();
  spc.validate();
  if (!(linear_learning_rate >= 0.0)) throw UsageError("linear learning rate must be >= 0");
  if (!(linear_margin >= 0.0)) throw UsageError("linear margin must be >= 0");
  if (checkpoints.empty()) throw UsageError("at least one checkpoint is required");
  for (std::size_t i = 0; i < checkpoints.size(); ++i) {
    if (checkpoints[i] < 1) throw UsageError("checkpoints must be >= 1");
    if (i > 0 && checkpoints[i] <= checkpoints[i - 1]) throw UsageError("checkpoints must be strictly increasing");
  }
  AdaptationConfig probe = adaptation;
  probe.batch.mode = SamplingMode::None;
  probe.validate();
}

std::unique_ptr<OnlineClassifier> make_classifier(const MethodSpec& method, const HyperParams& hp,
                                                  const PrototypeBank& bank, Eigen::Index dim, std::uint64_t seed) {
  method.validate();
  AdaptationConfig adaptation = hp.adaptation;
  adaptation.batch.mode = method.sampling;
  if (method.loss) adaptation.optim.loss = *method.loss;

  switch (method.kind) {
    case ClassifierKind::Static:
      return std::make_unique<StaticMethod>(bank);
    case ClassifierKind::OneNN:
      return std::make_unique<OneNNMethod>();
    case ClassifierKind::Svmil:
      return std::make_unique<SvmilMethod>(dim, hp.linear_learning_rate, hp.linear_margin);
    case ClassifierKind::Spc:
      return std::make_unique<SpcMethod>(bank, hp.spc, false, dim, adaptation, seed);
    case ClassifierKind::SpcPP:
      return std::make_unique<SpcMethod>(bank, hp.spc, true, dim, adaptation, seed);
    case ClassifierKind::Ours: {
      WindowConfig w = hp.window;
      w.enabled = method.window;
      return std::make_unique<OursMethod>(dim, w, adaptation, seed);
    }
  }
  throw UsageError("unsupported classifier kind");
}

// ---------------------------------------------------------------------------
// Protocol

double cumulative_accuracy(std::span<const PredictionRecord> records, int t) {
  if (t < 1 || static_cast<std::size_t>(t) > records.size())
    throw UsageError("cumulative_accuracy: t=" + std::to_string(t) + " out of range [1, " +
                     std::to_string(records.size()) + "]");
  long correct = 0;
  for (int i = 0; i < t; ++i) {
    const auto& r = records[static_cast<std::size_t>(i)];
    if (r.predicted && *r.predicted == r.truth) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(t);
}

double MetricSeries::at(int t) const {
  if (t < 1 || static_cast<std::size_t>(t) > accuracy.size())
    throw DataError("pattern '" + pattern_id + "': checkpoint t=" + std::to_string(t) + " exceeds length " +
                    std::to_string(accuracy.size()));
  return accuracy[static_cast<std::size_t>(t) - 1];
}

MetricSeries run_protocol(OnlineClassifier& classifier, const ConsumptionPattern& pattern) {
  MetricSeries s;
  s.pattern_id = pattern.pattern_id;
  s.records.reserve(pattern.size());
  s.accuracy.reserve(pattern.size());
  long correct = 0;
  for (const auto& obs : pattern.observations) {
    PredictionRecord rec;
    rec.t = obs.time;
    rec.predicted = classifier.predict(obs.feature, obs.time);
    // The prediction is final before the truth is revealed.
    rec.truth = obs.label;
    if (rec.predicted && *rec.predicted == rec.truth) ++correct;
    s.records.push_back(std::move(rec));
    s.accuracy.push_back(static_cast<double>(correct) / static_cast<double>(obs.time));
    classifier.observe(obs.feature, obs.label, obs.time);
  }
  return s;
}

std::uint64_t run_seed(std::uint64_t seed, std::string_view method, std::string_view pattern_id) {
  return hash_string(pattern_id, hash_string(method, seed));
}

MetricSeries run_pattern(const MethodSpec& method, const HyperParams& hp, const PrototypeBank& bank,
                         const ConsumptionPattern& pattern, std::uint64_t seed) {
  pattern.validate();
  auto clf = make_classifier(method, hp, bank, pattern.dim(), run_seed(seed, method.name, pattern.pattern_id));
  return run_protocol(*clf, pattern);
}

ReportRow aggregate(std::string method, std::span<const MetricSeries> series, std::span<const int> checkpoints) {
  if (series.empty()) throw UsageError("aggregate: no series");
  ReportRow row;
  row.method = std::move(method);
  const double n = static_cast<double>(series.size());
  for (int t : checkpoints) {
    double sum = 0.0;
    for (const auto& s : series) sum += s.at(t);
    const double mean = sum / n;
    double var = 0.0;
    for (const auto& s : series) var += (s.at(t) - mean) * (s.at(t) - mean);
    row.mean.push_back(mean);
    row.std.push_back(std::sqrt(var / n));
  }
  return row;
}

BenchmarkResult run_benchmark(std::span<const MethodSpec> methods, const HyperParams& hp, const Benchmark& benchmark,
                              std::uint64_t seed, const RunOptions& options) {
  if (methods.empty()) throw UsageError("run_benchmark: no methods");
  if (benchmark.patterns.empty()) throw UsageError("run_benchmark: no patterns");
  hp.validate();
  for (const auto& m : methods) m.validate();
  for (const auto& p : benchmark.patterns)
    if (static_cast<int>(p.size()) < hp.checkpoints.back())
      throw DataError("pattern '" + p.pattern_id + "' has " + std::to_string(p.size()) +
                      " observations, fewer than checkpoint t=" + std::to_string(hp.checkpoints.back()));

  const std::size_t np = benchmark.patterns.size();
  const std::size_t total = methods.size() * np;
  BenchmarkResult result;
  result.checkpoints = hp.checkpoints;
  result.series.assign(methods.size(), std::vector<MetricSeries>(np));
  std::vector<std::exception_ptr> errors(total);

  auto run_task = [&](std::size_t task) {
    const std::size_t mi = task / np;
    const std::size_t pi = task % np;
    try {
      result.series[mi][pi] = run_pattern(methods[mi], hp, benchmark.bank, benchmark.patterns[pi], seed);
    } catch (...) {
      errors[task] = std::current_exception();
    }
  };

  int threads = options.threads;
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = static_cast<int>(std::min<std::size_t>(static_cast<std::size_t>(threads), total));
  if (threads <= 1) {
    for (std::size_t t = 0; t < total; ++t) run_task(t);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::jthread> pool;
    for (int w = 0; w < threads; ++w)
      pool.emplace_back([&] {
        for (std::size_t t = next++; t < total; t = next++) run_task(t);
      });
  }

  for (std::size_t t = 0; t < total; ++t)
    if (errors[t])
      rethrow_with_context(errors[t], "method '" + methods[t / np].name + "', pattern '" +
                                          benchmark.patterns[t % np].pattern_id + "': ");

  for (std::size_t mi = 0; mi < methods.size(); ++mi) {
    result.methods.push_back(methods[mi].name);
    result.rows.push_back(aggregate(methods[mi].name, result.series[mi], hp.checkpoints));
  }
  return result;
}

// ---------------------------------------------------------------------------
// Reports

std::string format_report(std::span<const ReportRow> rows, std::span<const int> checkpoints, ReportFormat format) {
  if (rows.empty()) throw UsageError("report has no rows");
  for (const auto& r : rows)
    if (r.mean.size() != checkpoints.size() || r.std.size() != checkpoints.size())
      throw UsageError("report row '" + r.method + "' does not match the checkpoints");

  if (format == ReportFormat::Csv) {
    std::string out = "method";
    for (int t : checkpoints) out += ",t" + std::to_string(t) + "_mean,t" + std::to_string(t) + "_std";
    out += '\n';
    for (const auto& r : rows) {
      out += r.method;
      for (std::size_t i = 0; i < checkpoints.size(); ++i) out += "," + fixed6(r.mean[i]) + "," + fixed6(r.std[i]);
      out += '\n';
    }
    return out;
  }

  nlohmann::ordered_json j;
  j["checkpoints"] = std::vector<int>(checkpoints.begin(), checkpoints.end());
  j["rows"] = nlohmann::ordered_json::array();
  for (const auto& r : rows) {
    nlohmann::ordered_json row;
    row["method"] = r.method;
    for (std::size_t i = 0; i < checkpoints.size(); ++i) {
      const std::string t = "t" + std::to_string(checkpoints[i]);
      row[t + "_mean"] = r.mean[i];
      row[t + "_std"] = r.std[i];
    }
    j["rows"].push_back(std::move(row));
  }
  return j.dump(2) + "\n";
}

std::vector<ReportRow> parse_report_json(std::string_view text, std::vector<int>* checkpoints) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report json: ") + e.what());
  }
  try {
    const auto cps = j.at("checkpoints").get<std::vector<int>>();
    std::vector<ReportRow> rows;
    for (const auto& r : j.at("rows")) {
      ReportRow row;
      row.method = r.at("method").get<std::string>();
      for (int t : cps) {
        const std::string k = "t" + std::to_string(t);
        row.mean.push_back(r.at(k + "_mean").get<double>());
        row.std.push_back(r.at(k + "_std").get<double>());
      }
      rows.push_back(std::move(row));
    }
    if (checkpoints) *checkpoints = cps;
    return rows;
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("report json: ") + e.what());
  }
}

namespace {

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

}  // namespace

void export_report(std::span<const ReportRow> rows, std::span<const int> checkpoints, ReportFormat format,
                   const std::filesystem::path& path) {
  write_text(path, format_report(rows, checkpoints, format));
}

std::string format_series(const BenchmarkResult& result) {
  std::string out = "method,pattern_id,t,correct,accuracy\n";
  for (std::size_t mi = 0; mi < result.series.size(); ++mi) {
    for (const auto& s : result.series[mi]) {
      for (std::size_t i = 0; i < s.accuracy.size(); ++i) {
        const auto& r = s.records[i];
        const bool ok = r.predicted && *r.predicted == r.truth;
        out += result.methods[mi];
        out += ',';
        out += s.pattern_id;
        out += ',';
        out += std::to_string(i + 1);
        out += ok ? ",1," : ",0,";
        out += shortest(s.accuracy[i]);
        out += '\n';
      }
    }
  }
  return out;
}

void export_series(const BenchmarkResult& result, const std::filesystem::path& path) {
  write_text(path, format_series(result));
}

void export_all(const BenchmarkResult& result, const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw DataError("cannot create output directory '" + dir.string() + "': " + ec.message());
  export_report(result.rows, result.checkpoints, ReportFormat::Csv, dir / "report.csv");
  export_report(result.rows, result.checkpoints, ReportFormat::Json, dir / "report.json");
  export_series(result, dir / "series.csv");
}

}  // namespace perfood
