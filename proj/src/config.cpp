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

#include "perfood/config.hpp"

#include <cstdlib>
#include <fstream>
#include <set>
#include <sstream>

namespace perfood {

namespace {

void reject_unknown(const Json& obj, std::string_view section, const std::set<std::string>& allowed) {
  if (!obj.is_object()) throw UsageError("config: '" + std::string(section) + "' must be an object");
  for (const auto& [key, _] : obj.items())
    if (!allowed.count(key)) throw UsageError("config: unknown key '" + std::string(section) + "." + key + "'");
}

template <typename T>
void read(const Json& obj, const char* key, T& out, std::string_view section) {
  auto it = obj.find(key);
  if (it == obj.end()) return;
  try {
    out = it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw UsageError("config: bad value for '" + std::string(section) + "." + key + "': " + it->dump());
  }
}

}  // namespace

Json parse_config(std::string_view text) {
  Json j;
  try {
    j = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw UsageError("config must be a JSON object");
  return j;
}

Json load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot read config file '" + path.string() + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::optional<std::filesystem::path> config_path_from_env() {
  const char* v = std::getenv(kConfigEnvVar);
  if (!v || !*v) return std::nullopt;
  return std::filesystem::path(v);
}

Json parse_assignment(std::string_view assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string_view::npos || eq == 0) throw UsageError("expected key=value, got '" + std::string(assignment) + "'");
  const std::string path(assignment.substr(0, eq));
  const std::string text(assignment.substr(eq + 1));
  Json value = Json::parse(text, nullptr, false);
  if (value.is_discarded()) value = text;

  std::vector<std::string> keys;
  std::stringstream ss(path);
  for (std::string k; std::getline(ss, k, '.');) {
    if (k.empty()) throw UsageError("empty key segment in '" + path + "'");
    keys.push_back(k);
  }
  Json patch = value;
  for (auto it = keys.rbegin(); it != keys.rend(); ++it) patch = Json{{*it, patch}};
  return patch;
}

void merge_config(Json& base, const Json& patch) {
  if (!patch.is_object()) throw UsageError("config patch must be an object");
  if (base.is_null()) base = Json::object();
  base.merge_patch(patch);
}

HyperParams hyperparams_from_json(const Json& config, HyperParams hp) {
  reject_unknown(config, "<root>", {"window", "adaptation", "spc", "linear", "checkpoints", "sim"});

  if (auto it = config.find("window"); it != config.end()) {
    reject_unknown(*it, "window", {"k", "alpha", "t_min"});
    read(*it, "k", hp.window.k, "window");
    read(*it, "alpha", hp.window.alpha, "window");
    read(*it, "t_min", hp.window.t_min, "window");
  }
  if (auto it = config.find("adaptation"); it != config.end()) {
    reject_unknown(*it, "adaptation",
                   {"batch_size", "jitter_sigma", "min_buffer", "groups", "activation", "residual", "init_sigma", "lr",
                    "weight_decay", "barlow_lambda"});
    auto& a = hp.adaptation;
    read(*it, "batch_size", a.batch.batch_size, "adaptation");
    read(*it, "jitter_sigma", a.batch.jitter_sigma, "adaptation");
    read(*it, "min_buffer", a.min_buffer, "adaptation");
    read(*it, "groups", a.groups, "adaptation");
    read(*it, "init_sigma", a.init_sigma, "adaptation");
    read(*it, "residual", a.residual, "adaptation");
    read(*it, "lr", a.optim.learning_rate, "adaptation");
    read(*it, "weight_decay", a.optim.weight_decay, "adaptation");
    read(*it, "barlow_lambda", a.optim.barlow_lambda, "adaptation");
    std::string act(to_string(a.activation));
    read(*it, "activation", act, "adaptation");
    a.activation = parse_activation(act);
  }
  if (auto it = config.find("spc"); it != config.end()) {
    reject_unknown(*it, "spc", {"mix_weight", "decay_halflife", "freq_weight"});
    read(*it, "mix_weight", hp.spc.mix_weight, "spc");
    read(*it, "decay_halflife", hp.spc.decay_halflife, "spc");
    read(*it, "freq_weight", hp.spc.freq_weight, "spc");
  }
  if (auto it = config.find("linear"); it != config.end()) {
    reject_unknown(*it, "linear", {"learning_rate", "margin"});
    read(*it, "learning_rate", hp.linear_learning_rate, "linear");
    read(*it, "margin", hp.linear_margin, "linear");
  }
  read(config, "checkpoints", hp.checkpoints, "<root>");
  hp.validate();
  return hp;
}

#define PERFOOD_SIM_FIELDS(X)                                                                                       \
  X(num_patterns) X(pattern_length) X(feature_dim) X(smoothing) X(seed) X(classes_per_pattern_target)             \
  X(sub_clusters_per_class) X(prototype_separation) X(class_pool_size) X(noise_sigma) X(sub_cluster_spread) X(style_dim) X(feature_scale)        \
  X(new_class_rate) X(seed_length_min) X(seed_length_max) X(seed_core_fraction) X(bank_coverage) X(bank_noise) X(twin_fraction)

SimConfig sim_config_from_json(const Json& config, SimConfig sim) {
  auto it = config.find("sim");
  if (it == config.end()) return sim;
  std::set<std::string> allowed{"shape"};
#define X(f) allowed.insert(#f);
  PERFOOD_SIM_FIELDS(X)
#undef X
  reject_unknown(*it, "sim", allowed);
  read(*it, "shape", sim.shape, "sim");
#define X(f) read(*it, #f, sim.f, "sim");
  PERFOOD_SIM_FIELDS(X)
#undef X
  sim.validate();
  return sim;
}

Json to_json(const HyperParams& hp) {
  const auto& a = hp.adaptation;
  return Json{
      {"window", {{"k", hp.window.k}, {"alpha", hp.window.alpha}, {"t_min", hp.window.t_min}}},
      {"adaptation",
       {{"batch_size", a.batch.batch_size},
        {"jitter_sigma", a.batch.jitter_sigma},
        {"min_buffer", a.min_buffer},
        {"groups", a.groups},
        {"activation", std::string(to_string(a.activation))},
        {"residual", a.residual},
        {"init_sigma", a.init_sigma},
        {"lr", a.optim.learning_rate},
        {"weight_decay", a.optim.weight_decay},
        {"barlow_lambda", a.optim.barlow_lambda}}},
      {"spc",
       {{"mix_weight", hp.spc.mix_weight},
        {"decay_halflife", hp.spc.decay_halflife},
        {"freq_weight", hp.spc.freq_weight}}},
      {"linear", {{"learning_rate", hp.linear_learning_rate}, {"margin", hp.linear_margin}}},
      {"checkpoints", hp.checkpoints},
  };
}

Json to_json(const SimConfig& c) {
  Json j;
  j["shape"] = c.shape;
#define X(f) j[#f] = c.f;
  PERFOOD_SIM_FIELDS(X)
#undef X
  return j;
}

SimConfig sim_config_from_manifest(const Json& j) {
  SimConfig c;
  try {
    c.shape = j.at("shape").get<std::string>();
#define X(f) c.f = j.at(#f).get<decltype(c.f)>();
    PERFOOD_SIM_FIELDS(X)
#undef X
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("manifest sim_config: ") + e.what());
  }
  return c;
}

}  // namespace perfood
