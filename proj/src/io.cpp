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

#include "perfood/io.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "perfood/config.hpp"

namespace perfood {

namespace {

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw DataError("failed writing '" + path.string() + "'");
}

std::vector<double> to_vector(const Eigen::Ref<const Vec>& v) { return {v.data(), v.data() + v.size()}; }

}  // namespace

std::filesystem::path manifest_path(const std::filesystem::path& jsonl) {
  std::string name = jsonl.filename().string();
  constexpr std::string_view ext = ".jsonl";
  if (name.size() > ext.size() && name.compare(name.size() - ext.size(), ext.size(), ext) == 0)
    name.resize(name.size() - ext.size());
  return jsonl.parent_path() / (name + ".manifest.json");
}

std::string format_benchmark_jsonl(const Benchmark& benchmark) {
  std::vector<const ConsumptionPattern*> order;
  for (const auto& p : benchmark.patterns) order.push_back(&p);
  std::stable_sort(order.begin(), order.end(),
                   [](const auto* a, const auto* b) { return a->pattern_id < b->pattern_id; });
  std::string out;
  for (const auto* p : order) {
    for (const auto& obs : p->observations) {
      nlohmann::ordered_json line;
      line["pattern_id"] = p->pattern_id;
      line["t"] = obs.time;
      line["label"] = benchmark.labels.name(obs.label);
      line["feature"] = to_vector(obs.feature);
      out += line.dump();
      out += '\n';
    }
  }
  return out;
}

std::string format_manifest(const Benchmark& benchmark) {
  nlohmann::ordered_json m;
  m["format"] = kManifestFormat;
  m["version"] = kManifestVersion;
  m["feature_dim"] = benchmark.dim();
  m["num_patterns"] = benchmark.patterns.size();
  if (benchmark.config)
    m["sim_config"] = to_json(*benchmark.config);
  else
    m["sim_config"] = nullptr;
  nlohmann::ordered_json bank;
  bank["labels"] = nlohmann::ordered_json::array();
  bank["prototypes"] = nlohmann::ordered_json::array();
  const auto& B = benchmark.bank;
  for (std::size_t i = 0; i < B.size(); ++i) {
    bank["labels"].push_back(benchmark.labels.name(B.labels()[i]));
    bank["prototypes"].push_back(to_vector(B.prototypes().col(static_cast<Eigen::Index>(i))));
  }
  m["prototype_bank"] = std::move(bank);
  return m.dump(2) + "\n";
}

void write_benchmark(const Benchmark& benchmark, const std::filesystem::path& jsonl) {
  benchmark.validate();
  write_file(jsonl, format_benchmark_jsonl(benchmark));
  write_file(manifest_path(jsonl), format_manifest(benchmark));
}

Benchmark parse_benchmark_jsonl(std::string_view text) {
  Benchmark b;
  std::map<std::string, std::size_t> index;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::string last_id;
  while (pos < text.size()) {
    auto end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string_view::npos) continue;
    const std::string where = "benchmark line " + std::to_string(line_no) + ": ";

    nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw DataError(where + "not a JSON object");
    std::string id, label;
    int t = 0;
    std::vector<double> feature;
    try {
      id = j.at("pattern_id").get<std::string>();
      t = j.at("t").get<int>();
      label = j.at("label").get<std::string>();
      feature = j.at("feature").get<std::vector<double>>();
    } catch (const nlohmann::json::exception& e) {
      throw DataError(where + e.what());
    }
    if (feature.empty()) throw DataError(where + "empty feature");
    if (!b.patterns.empty() && static_cast<Eigen::Index>(feature.size()) != b.dim())
      throw DataError(where + "feature dimension " + std::to_string(feature.size()) + " differs from " +
                      std::to_string(b.dim()));

    auto [it, inserted] = index.try_emplace(id, b.patterns.size());
    if (inserted) {
      if (!b.patterns.empty() && id < last_id) throw DataError(where + "patterns not sorted by pattern_id");
      b.patterns.push_back(ConsumptionPattern{id, {}});
      last_id = id;
    } else if (id != last_id) {
      throw DataError(where + "observations of pattern '" + id + "' are not contiguous");
    }
    auto& p = b.patterns[it->second];
    if (t != static_cast<int>(p.size()) + 1)
      throw DataError(where + "pattern '" + id + "' expected t=" + std::to_string(p.size() + 1) + ", got " +
                      std::to_string(t));
    LabeledObservation obs;
    obs.time = t;
    obs.feature = Eigen::Map<const Vec>(feature.data(), static_cast<Eigen::Index>(feature.size()));
    try {
      check_feature(obs.feature);
    } catch (const DataError& e) {
      throw DataError(where + e.what());
    }
    obs.label = b.labels.intern(label);
    p.observations.push_back(std::move(obs));
  }
  if (b.patterns.empty()) throw DataError("benchmark has no observations");
  return b;
}

PrototypeBank fallback_bank(const Benchmark& benchmark, double coverage, double noise_sigma, std::uint64_t seed) {
  const Eigen::Index d = benchmark.dim();
  std::vector<Vec> sums(benchmark.labels.size(), Vec::Zero(d));
  std::vector<bool> seen(benchmark.labels.size(), false);
  for (const auto& p : benchmark.patterns)
    for (const auto& obs : p.observations) {
      const auto id = static_cast<std::size_t>(obs.label.id());
      sums[id] += obs.feature;
      seen[id] = true;
    }
  std::vector<ClassLabel> labels;
  std::vector<Vec> means;
  for (std::size_t i = 0; i < sums.size(); ++i) {
    if (!seen[i] || sums[i].norm() == 0.0) continue;
    labels.push_back(ClassLabel{static_cast<std::int32_t>(i)});
    means.push_back(sums[i].normalized());
  }
  if (labels.empty()) throw DataError("cannot derive a prototype bank: no usable class means");
  Rng rng = derive_rng(seed, 1);
  return PrototypeBank::from_noisy_prototypes(labels, means, coverage, noise_sigma, rng);
}

Benchmark read_benchmark(const std::filesystem::path& jsonl, std::uint64_t fallback_seed) {
  Benchmark b = parse_benchmark_jsonl(read_file(jsonl));
  const auto mpath = manifest_path(jsonl);
  bool have_bank = false;
  if (std::filesystem::exists(mpath)) {
    nlohmann::json m = nlohmann::json::parse(read_file(mpath), nullptr, false);
    if (m.is_discarded() || !m.is_object()) throw DataError("manifest '" + mpath.string() + "' is not a JSON object");
    try {
      if (m.value("format", std::string()) != kManifestFormat)
        throw DataError("manifest '" + mpath.string() + "' has an unknown format");
      if (m.at("feature_dim").get<Eigen::Index>() != b.dim())
        throw DataError("manifest feature_dim does not match the benchmark features");
      if (auto it = m.find("sim_config"); it != m.end() && !it->is_null()) b.config = sim_config_from_manifest(*it);
      if (auto it = m.find("prototype_bank"); it != m.end() && !it->is_null()) {
        const auto names = it->at("labels").get<std::vector<std::string>>();
        const auto protos = it->at("prototypes").get<std::vector<std::vector<double>>>();
        if (names.size() != protos.size()) throw DataError("manifest bank labels and prototypes differ in length");
        std::vector<std::pair<ClassLabel, Vec>> entries;
        for (std::size_t i = 0; i < names.size(); ++i) {
          if (static_cast<Eigen::Index>(protos[i].size()) != b.dim())
            throw DataError("manifest bank prototype has the wrong dimension");
          entries.emplace_back(b.labels.intern(names[i]),
                               Eigen::Map<const Vec>(protos[i].data(), static_cast<Eigen::Index>(protos[i].size())));
        }
        if (!entries.empty()) {
          b.bank = PrototypeBank(std::move(entries));
          have_bank = true;
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw DataError("manifest '" + mpath.string() + "': " + e.what());
    }
  }
  if (!have_bank) {
    const SimConfig defaults = b.config.value_or(SimConfig{});
    b.bank = fallback_bank(b, defaults.bank_coverage, defaults.bank_noise, fallback_seed);
  }
  b.validate();
  return b;
}

}  // namespace perfood
