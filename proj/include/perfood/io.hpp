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

// Benchmark files.
//
// A benchmark is a JSON Lines file with one observation per line,
//   {"pattern_id": "p00", "t": 1, "label": "food_017", "feature": [...]}
// sorted by (pattern_id, t), plus a sidecar "<stem>.manifest.json" holding the
// feature dimension, the simulator settings (null for ingested features) and
// the generic prototype bank. Externally extracted features may come without
// a manifest; a bank is then derived from the data (see fallback_bank).

#pragma once

#include <cstdint>
#include <filesystem>
#include <string>

#include "perfood/simgen.hpp"

namespace perfood {

inline constexpr const char* kManifestFormat = "perfood-benchmark";
inline constexpr int kManifestVersion = 1;

/// "x/bench.jsonl" -> "x/bench.manifest.json".
std::filesystem::path manifest_path(const std::filesystem::path& jsonl);

std::string format_benchmark_jsonl(const Benchmark& benchmark);
std::string format_manifest(const Benchmark& benchmark);
void write_benchmark(const Benchmark& benchmark, const std::filesystem::path& jsonl);

/// Parses JSONL text; labels are interned into benchmark.labels. No bank.
Benchmark parse_benchmark_jsonl(std::string_view text);
/// Reads the JSONL file and its manifest when present. Without a manifest bank,
/// fallback_bank(..., seed) is used.
Benchmark read_benchmark(const std::filesystem::path& jsonl, std::uint64_t fallback_seed = 0);

/// Class means over every observation, kept for a seeded `coverage` fraction of
/// classes and perturbed with Gaussian noise.
PrototypeBank fallback_bank(const Benchmark& benchmark, double coverage, double noise_sigma, std::uint64_t seed);

}  // namespace perfood
