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

// JSON configuration for hyperparameters and simulator settings.
//
// Layout (every key optional, unknown keys rejected):
//
//   {
//     "window":     {"k", "alpha", "t_min"},
//     "adaptation": {"batch_size", "jitter_sigma", "min_buffer", "groups",
//                    "activation", "residual", "init_sigma", "lr",
//                    "weight_decay", "barlow_lambda"},
//     "spc":        {"mix_weight", "decay_halflife", "freq_weight"},
//     "linear":     {"learning_rate", "margin"},
//     "checkpoints": [75, 150, 225, 300],
//     "sim":        {<SimConfig field names>}
//   }

#pragma once

#include <filesystem>
#include <optional>
#include <string_view>

#include <json.hpp>

#include "perfood/bench.hpp"
#include "perfood/simgen.hpp"

namespace perfood {

inline constexpr const char* kConfigEnvVar = "PERFOOD_CONFIG";

using Json = nlohmann::json;

Json parse_config(std::string_view text);
Json load_config_file(const std::filesystem::path& path);
/// Path named by the PERFOOD_CONFIG environment variable, if set and non-empty.
std::optional<std::filesystem::path> config_path_from_env();

/// "a.b.c=value" as a nested patch; value is parsed as JSON, else taken as a string.
Json parse_assignment(std::string_view assignment);
/// RFC 7386 merge; later patches win.
void merge_config(Json& base, const Json& patch);

/// Applies the non-"sim" sections on top of `base`.
HyperParams hyperparams_from_json(const Json& config, HyperParams base = {});
/// Applies the "sim" section on top of `base`.
SimConfig sim_config_from_json(const Json& config, SimConfig base);

Json to_json(const HyperParams& hp);
Json to_json(const SimConfig& config);
/// Inverse of to_json(SimConfig); every field is required.
SimConfig sim_config_from_manifest(const Json& j);

}  // namespace perfood
