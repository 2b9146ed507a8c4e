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

/* C interface to the perfood engine.
 *
 * Every handle is opaque and owned by the caller once returned; release it
 * with the matching *_destroy function. Functions returning pfc_status set a
 * thread-local message retrievable with pfc_last_error() on failure. */

#ifndef PERFOOD_PERFOOD_H_
#define PERFOOD_PERFOOD_H_

#include <stddef.h>
#include <stdint.h>

#if defined(PERFOOD_BUILDING_LIBRARY)
#define PFC_API __attribute__((visibility("default")))
#else
#define PFC_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pfc_status {
  PFC_OK = 0,
  PFC_ERR_USAGE = 1,
  PFC_ERR_DATA = 2,
  PFC_ERR_NUMERICAL = 3,
  PFC_ERR_INTERNAL = 4
} pfc_status;

typedef struct pfc_options pfc_options;
typedef struct pfc_benchmark pfc_benchmark;
typedef struct pfc_report pfc_report;

PFC_API const char* pfc_version(void);
/* Message for the last failure on this thread; never NULL. */
PFC_API const char* pfc_last_error(void);

/* Options: a JSON document of overrides on top of the built-in defaults. */
PFC_API pfc_status pfc_options_create(pfc_options** out);
PFC_API void pfc_options_destroy(pfc_options* options);
PFC_API pfc_status pfc_options_merge_json(pfc_options* options, const char* json);
PFC_API pfc_status pfc_options_merge_file(pfc_options* options, const char* path);
/* "section.key=value", value parsed as JSON when possible. */
PFC_API pfc_status pfc_options_set(pfc_options* options, const char* assignment);
/* Integer override at a dotted path such as "sim.seed". *found is set to 0
 * when the path is absent; *out is left untouched then. */
PFC_API pfc_status pfc_options_get_uint64(const pfc_options* options, const char* key, uint64_t* out, int* found);
/* Effective hyperparameters as JSON. Writes at most cap bytes including the
 * terminator; *needed (optional) receives the full size including it. A
 * truncated copy is still terminated and reported as PFC_ERR_USAGE. */
PFC_API pfc_status pfc_options_dump(const pfc_options* options, char* buf, size_t cap, size_t* needed);

/* Benchmarks. shape is "food101", "vfn" or "custom"; the "sim" section of the
 * options refines it. */
PFC_API pfc_status pfc_simulate(const pfc_options* options, const char* shape, uint64_t seed, pfc_benchmark** out);
PFC_API pfc_status pfc_benchmark_load(const char* path, uint64_t seed, pfc_benchmark** out);
PFC_API pfc_status pfc_benchmark_save(const pfc_benchmark* benchmark, const char* path);
PFC_API void pfc_benchmark_destroy(pfc_benchmark* benchmark);
PFC_API size_t pfc_benchmark_num_patterns(const pfc_benchmark* benchmark);
PFC_API size_t pfc_benchmark_feature_dim(const pfc_benchmark* benchmark);
PFC_API size_t pfc_benchmark_pattern_length(const pfc_benchmark* benchmark, size_t pattern);
PFC_API size_t pfc_benchmark_pattern_classes(const pfc_benchmark* benchmark, size_t pattern);

/* Evaluation. methods is a comma-separated list (e.g. "OURS,SPC++,1-NN");
 * backbone is "simsiam" or "barlow". threads <= 0 uses every core. */
PFC_API pfc_status pfc_run(const pfc_benchmark* benchmark, const pfc_options* options, const char* methods,
                           const char* backbone, uint64_t seed, int threads, pfc_report** out);
/* The six sampling / window ablation rows for one backbone. */
PFC_API pfc_status pfc_ablate(const pfc_benchmark* benchmark, const pfc_options* options, const char* backbone,
                              uint64_t seed, int threads, pfc_report** out);
PFC_API void pfc_report_destroy(pfc_report* report);
PFC_API size_t pfc_report_num_methods(const pfc_report* report);
PFC_API size_t pfc_report_num_checkpoints(const pfc_report* report);
PFC_API const char* pfc_report_method(const pfc_report* report, size_t method);
PFC_API int pfc_report_checkpoint(const pfc_report* report, size_t checkpoint);
/* Accuracy in [0, 1]; -1 for an out-of-range index. */
PFC_API double pfc_report_mean(const pfc_report* report, size_t method, size_t checkpoint);
PFC_API double pfc_report_std(const pfc_report* report, size_t method, size_t checkpoint);
/* format: 0 = CSV, 1 = JSON. Same buffer convention as pfc_options_dump. */
PFC_API pfc_status pfc_report_format(const pfc_report* report, int format, char* buf, size_t cap, size_t* needed);
/* report.csv, report.json and series.csv inside dir. */
PFC_API pfc_status pfc_report_export(const pfc_report* report, const char* dir);

/* Finite-difference check of the adapter gradients. loss is "simsiam" or
 * "barlow"; instances <= 0 uses the default. Returns PFC_ERR_NUMERICAL when
 * any entry disagrees. Output pointers are optional. */
PFC_API pfc_status pfc_gradcheck(const char* loss, int instances, uint64_t seed, size_t* checked, size_t* failures,
                                 double* max_rel_error);

#ifdef __cplusplus
}
#endif

#endif  // PERFOOD_PERFOOD_H_
