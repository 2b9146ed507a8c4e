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

#include "perfood/perfood.h"

#include <algorithm>
#include <cstring>
#include <exception>
#include <memory>
#include <string>

#include "perfood/bench.hpp"
#include "perfood/config.hpp"
#include "perfood/gradcheck.hpp"
#include "perfood/io.hpp"

struct pfc_options {
  perfood::Json overrides = perfood::Json::object();
};

struct pfc_benchmark {
  perfood::Benchmark benchmark;
};

struct pfc_report {
  perfood::BenchmarkResult result;
};

namespace {

thread_local std::string g_last_error;

pfc_status fail(pfc_status status, std::string message) {
  g_last_error = std::move(message);
  return status;
}

// Maps the engine's exception hierarchy onto status codes.
template <typename F>
pfc_status guarded(F&& body) {
  try {
    body();
    g_last_error.clear();
    return PFC_OK;
  } catch (const perfood::UsageError& e) {
    return fail(PFC_ERR_USAGE, e.what());
  } catch (const perfood::DataError& e) {
    return fail(PFC_ERR_DATA, e.what());
  } catch (const perfood::NumericalError& e) {
    return fail(PFC_ERR_NUMERICAL, e.what());
  } catch (const std::bad_alloc&) {
    return fail(PFC_ERR_INTERNAL, "out of memory");
  } catch (const std::exception& e) {
    return fail(PFC_ERR_INTERNAL, e.what());
  } catch (...) {
    return fail(PFC_ERR_INTERNAL, "unknown error");
  }
}

void require(const void* p, const char* what) {
  if (!p) throw perfood::UsageError(std::string(what) + " is NULL");
}

pfc_status copy_out(const std::string& text, char* buf, size_t cap, size_t* needed) {
  if (needed) *needed = text.size() + 1;
  if (buf && cap > 0) {
    const size_t n = std::min(cap - 1, text.size());
    std::memcpy(buf, text.data(), n);
    buf[n] = '\0';
    if (n < text.size()) return fail(PFC_ERR_USAGE, "buffer too small");
  }
  return PFC_OK;
}

perfood::HyperParams effective(const pfc_options* options) {
  return options ? perfood::hyperparams_from_json(options->overrides) : perfood::HyperParams{};
}

perfood::LossKind backbone_or_default(const char* backbone) {
  return backbone && *backbone ? perfood::parse_loss(backbone) : perfood::LossKind::SimSiam;
}

const perfood::ReportRow* row_at(const pfc_report* report, size_t method) {
  if (!report || method >= report->result.rows.size()) return nullptr;
  return &report->result.rows[method];
}

}  // namespace

extern "C" {

const char* pfc_version(void) { return "0.1.0"; }

const char* pfc_last_error(void) { return g_last_error.c_str(); }

pfc_status pfc_options_create(pfc_options** out) {
  return guarded([&] {
    require(out, "out");
    *out = new pfc_options;
  });
}

void pfc_options_destroy(pfc_options* options) { delete options; }

pfc_status pfc_options_merge_json(pfc_options* options, const char* json) {
  return guarded([&] {
    require(options, "options");
    require(json, "json");
    perfood::Json next = options->overrides;
    perfood::merge_config(next, perfood::parse_config(json));
    perfood::hyperparams_from_json(next);  // reject before committing
    options->overrides = std::move(next);
  });
}

pfc_status pfc_options_merge_file(pfc_options* options, const char* path) {
  return guarded([&] {
    require(options, "options");
    require(path, "path");
    perfood::Json next = options->overrides;
    perfood::merge_config(next, perfood::load_config_file(path));
    perfood::hyperparams_from_json(next);
    options->overrides = std::move(next);
  });
}

pfc_status pfc_options_set(pfc_options* options, const char* assignment) {
  return guarded([&] {
    require(options, "options");
    require(assignment, "assignment");
    perfood::Json next = options->overrides;
    perfood::merge_config(next, perfood::parse_assignment(assignment));
    perfood::hyperparams_from_json(next);
    options->overrides = std::move(next);
  });
}

pfc_status pfc_options_get_uint64(const pfc_options* options, const char* key, uint64_t* out, int* found) {
  return guarded([&] {
    require(options, "options");
    require(key, "key");
    require(out, "out");
    require(found, "found");
    *found = 0;
    const perfood::Json* node = &options->overrides;
    std::string_view rest(key);
    while (!rest.empty()) {
      const auto dot = rest.find('.');
      const std::string part(rest.substr(0, dot));
      if (!node->is_object()) return;
      auto it = node->find(part);
      if (it == node->end()) return;
      node = &*it;
      rest = dot == std::string_view::npos ? std::string_view{} : rest.substr(dot + 1);
    }
    if (!node->is_number_unsigned() && !(node->is_number_integer() && node->get<std::int64_t>() >= 0))
      throw perfood::UsageError(std::string("'") + key + "' is not a non-negative integer");
    *out = node->get<std::uint64_t>();
    *found = 1;
  });
}

pfc_status pfc_options_dump(const pfc_options* options, char* buf, size_t cap, size_t* needed) {
  std::string text;
  const pfc_status st = guarded([&] {
    require(options, "options");
    perfood::Json j = perfood::to_json(effective(options));
    if (auto it = options->overrides.find("sim"); it != options->overrides.end()) j["sim"] = *it;
    text = j.dump(2);
  });
  if (st != PFC_OK) return st;
  return copy_out(text, buf, cap, needed);
}

pfc_status pfc_simulate(const pfc_options* options, const char* shape, uint64_t seed, pfc_benchmark** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    perfood::SimConfig config = perfood::SimConfig::for_shape(shape ? shape : "custom");
    if (options) config = perfood::sim_config_from_json(options->overrides, config);
    config.seed = seed;
    config.validate();
    auto b = std::make_unique<pfc_benchmark>();
    b->benchmark = perfood::make_benchmark(config);
    *out = b.release();
  });
}

pfc_status pfc_benchmark_load(const char* path, uint64_t seed, pfc_benchmark** out) {
  return guarded([&] {
    require(out, "out");
    require(path, "path");
    *out = nullptr;
    auto b = std::make_unique<pfc_benchmark>();
    b->benchmark = perfood::read_benchmark(path, seed);
    *out = b.release();
  });
}

pfc_status pfc_benchmark_save(const pfc_benchmark* benchmark, const char* path) {
  return guarded([&] {
    require(benchmark, "benchmark");
    require(path, "path");
    perfood::write_benchmark(benchmark->benchmark, path);
  });
}

void pfc_benchmark_destroy(pfc_benchmark* benchmark) { delete benchmark; }

size_t pfc_benchmark_num_patterns(const pfc_benchmark* benchmark) {
  return benchmark ? benchmark->benchmark.patterns.size() : 0;
}

size_t pfc_benchmark_feature_dim(const pfc_benchmark* benchmark) {
  return benchmark ? static_cast<size_t>(benchmark->benchmark.dim()) : 0;
}

size_t pfc_benchmark_pattern_length(const pfc_benchmark* benchmark, size_t pattern) {
  if (!benchmark || pattern >= benchmark->benchmark.patterns.size()) return 0;
  return benchmark->benchmark.patterns[pattern].size();
}

size_t pfc_benchmark_pattern_classes(const pfc_benchmark* benchmark, size_t pattern) {
  if (!benchmark || pattern >= benchmark->benchmark.patterns.size()) return 0;
  return perfood::distinct_classes(benchmark->benchmark.patterns[pattern]);
}

pfc_status pfc_run(const pfc_benchmark* benchmark, const pfc_options* options, const char* methods,
                   const char* backbone, uint64_t seed, int threads, pfc_report** out) {
  return guarded([&] {
    require(benchmark, "benchmark");
    require(methods, "methods");
    require(out, "out");
    *out = nullptr;
    const auto specs = perfood::parse_method_list(methods, backbone_or_default(backbone));
    auto r = std::make_unique<pfc_report>();
    r->result = perfood::run_benchmark(specs, effective(options), benchmark->benchmark, seed,
                                       perfood::RunOptions{threads});
    *out = r.release();
  });
}

pfc_status pfc_ablate(const pfc_benchmark* benchmark, const pfc_options* options, const char* backbone,
                      uint64_t seed, int threads, pfc_report** out) {
  return guarded([&] {
    require(benchmark, "benchmark");
    require(out, "out");
    *out = nullptr;
    const auto specs = perfood::ablation_methods(backbone_or_default(backbone));
    auto r = std::make_unique<pfc_report>();
    r->result = perfood::run_benchmark(specs, effective(options), benchmark->benchmark, seed,
                                       perfood::RunOptions{threads});
    *out = r.release();
  });
}

void pfc_report_destroy(pfc_report* report) { delete report; }

size_t pfc_report_num_methods(const pfc_report* report) { return report ? report->result.rows.size() : 0; }

size_t pfc_report_num_checkpoints(const pfc_report* report) {
  return report ? report->result.checkpoints.size() : 0;
}

const char* pfc_report_method(const pfc_report* report, size_t method) {
  const auto* row = row_at(report, method);
  return row ? row->method.c_str() : nullptr;
}

int pfc_report_checkpoint(const pfc_report* report, size_t checkpoint) {
  if (!report || checkpoint >= report->result.checkpoints.size()) return -1;
  return report->result.checkpoints[checkpoint];
}

double pfc_report_mean(const pfc_report* report, size_t method, size_t checkpoint) {
  const auto* row = row_at(report, method);
  return row && checkpoint < row->mean.size() ? row->mean[checkpoint] : -1.0;
}

double pfc_report_std(const pfc_report* report, size_t method, size_t checkpoint) {
  const auto* row = row_at(report, method);
  return row && checkpoint < row->std.size() ? row->std[checkpoint] : -1.0;
}

pfc_status pfc_report_format(const pfc_report* report, int format, char* buf, size_t cap, size_t* needed) {
  std::string text;
  const pfc_status st = guarded([&] {
    require(report, "report");
    if (format != 0 && format != 1) throw perfood::UsageError("format must be 0 (CSV) or 1 (JSON)");
    text = perfood::format_report(report->result.rows, report->result.checkpoints,
                                  format == 0 ? perfood::ReportFormat::Csv : perfood::ReportFormat::Json);
  });
  if (st != PFC_OK) return st;
  return copy_out(text, buf, cap, needed);
}

pfc_status pfc_report_export(const pfc_report* report, const char* dir) {
  return guarded([&] {
    require(report, "report");
    require(dir, "dir");
    perfood::export_all(report->result, dir);
  });
}

pfc_status pfc_gradcheck(const char* loss, int instances, uint64_t seed, size_t* checked, size_t* failures,
                         double* max_rel_error) {
  perfood::GradCheckReport rep;
  const pfc_status st = guarded([&] {
    require(loss, "loss");
    perfood::GradCheckOptions opts;
    if (instances > 0) opts.instances = instances;
    opts.seed = seed;
    rep = perfood::run_gradcheck(perfood::parse_loss(loss), opts);
  });
  if (st != PFC_OK) return st;
  if (checked) *checked = rep.checked;
  if (failures) *failures = rep.failures;
  if (max_rel_error) *max_rel_error = rep.max_rel_error;
  if (!rep.ok())
    return fail(PFC_ERR_NUMERICAL, std::to_string(rep.failures) + " of " + std::to_string(rep.checked) +
                                       " gradient entries disagree with finite differences (max rel error " +
                                       std::to_string(rep.max_rel_error) + ")");
  return PFC_OK;
}

}  // extern "C"
