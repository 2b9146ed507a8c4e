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

// Command-line front end. Talks to the engine only through the C API.

#include <cstdio>
#include <cstdlib>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "perfood/perfood.h"

namespace {

constexpr const char* kDefaultMethods = "OURS,SPC++,SPC,1-NN,SVMIL,STATIC";

struct Common {
  std::string config;
  std::vector<std::string> sets;
};

// Non-OK status carried out of a subcommand, with its exit code.
struct Failure {
  pfc_status status;
};

void check(pfc_status st, const char* what) {
  if (st == PFC_OK) return;
  std::fprintf(stderr, "perfood: %s: %s\n", what, pfc_last_error());
  throw Failure{st};
}

template <typename T, void (*Destroy)(T*)>
struct Handle {
  T* p = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Destroy(p); }
};

using Options = Handle<pfc_options, pfc_options_destroy>;
using Bench = Handle<pfc_benchmark, pfc_benchmark_destroy>;
using Report = Handle<pfc_report, pfc_report_destroy>;

// defaults < config file (--config, else $PERFOOD_CONFIG) < --set < dedicated flags
void build_options(Options& opts, const Common& common, const std::vector<std::string>& flag_sets) {
  check(pfc_options_create(&opts.p), "options");
  std::string path = common.config;
  if (path.empty())
    if (const char* env = std::getenv("PERFOOD_CONFIG")) path = env;
  if (!path.empty()) check(pfc_options_merge_file(opts.p, path.c_str()), "config");
  for (const auto& s : common.sets) check(pfc_options_set(opts.p, s.c_str()), "--set");
  for (const auto& s : flag_sets) check(pfc_options_set(opts.p, s.c_str()), "option");
}

void print_report(const pfc_report* r) {
  const size_t nc = pfc_report_num_checkpoints(r);
  std::printf("%-16s", "method");
  for (size_t j = 0; j < nc; ++j) std::printf("  %14s", ("t" + std::to_string(pfc_report_checkpoint(r, j))).c_str());
  std::printf("\n");
  for (size_t i = 0; i < pfc_report_num_methods(r); ++i) {
    std::printf("%-16s", pfc_report_method(r, i));
    for (size_t j = 0; j < nc; ++j)
      std::printf("  %6.1f +- %4.1f", 100.0 * pfc_report_mean(r, i, j), 100.0 * pfc_report_std(r, i, j));
    std::printf("\n");
  }
}

std::string join_ints(const std::vector<int>& v) {
  std::string s = "[";
  for (size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + std::to_string(v[i]);
  return s + "]";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Streaming personalized food classification benchmark"};
  app.require_subcommand(1);
  app.set_version_flag("--version", pfc_version());

  Common common;
  app.add_option("-c,--config", common.config, "JSON config file (default: $PERFOOD_CONFIG)");
  app.add_option("--set", common.sets, "override one setting, e.g. --set window.alpha=0")->take_all();

  // simulate
  auto* sim = app.add_subcommand("simulate", "generate a synthetic benchmark");
  sim->fallthrough();
  std::string shape = "food101", sim_out;
  std::optional<std::uint64_t> sim_seed;
  std::optional<int> sim_patterns, sim_length;
  sim->add_option("--shape", shape, "food101, vfn or custom")->check(CLI::IsMember({"food101", "vfn", "custom"}));
  sim->add_option("--seed", sim_seed, "simulator seed (default: sim.seed from config, else 0)");
  sim->add_option("--patterns", sim_patterns, "number of patterns");
  sim->add_option("--length", sim_length, "observations per pattern");
  sim->add_option("--out", sim_out, "output JSONL file")->required();

  // run
  auto* run = app.add_subcommand("run", "evaluate methods on a benchmark");
  run->fallthrough();
  std::string run_bench, run_out, methods = kDefaultMethods, run_backbone = "simsiam";
  std::uint64_t run_seed_v = 0;
  int run_threads = 0;
  std::vector<int> run_checkpoints;
  std::optional<double> alpha;
  run->add_option("--benchmark", run_bench, "benchmark JSONL file")->required()->check(CLI::ExistingFile);
  run->add_option("--methods", methods, "comma-separated method list")->capture_default_str();
  run->add_option("--seed", run_seed_v, "run seed")->capture_default_str();
  run->add_option("--out", run_out, "output directory")->required();
  run->add_option("--backbone", run_backbone, "simsiam or barlow")->check(CLI::IsMember({"simsiam", "barlow"}));
  run->add_option("--threads", run_threads, "worker threads (0: all cores)")->capture_default_str();
  run->add_option("--checkpoints", run_checkpoints, "report checkpoints")->delimiter(',');
  run->add_option("--alpha", alpha, "sliding-window fusion exponent");

  // ablate
  auto* abl = app.add_subcommand("ablate", "sampling / window ablation rows");
  abl->fallthrough();
  std::string abl_bench, abl_out, abl_backbone = "simsiam";
  std::uint64_t abl_seed = 0;
  int abl_threads = 0;
  std::vector<int> abl_checkpoints;
  abl->add_option("--benchmark", abl_bench, "benchmark JSONL file")->required()->check(CLI::ExistingFile);
  abl->add_option("--backbone", abl_backbone, "simsiam or barlow")->check(CLI::IsMember({"simsiam", "barlow"}));
  abl->add_option("--out", abl_out, "output directory")->required();
  abl->add_option("--seed", abl_seed, "run seed")->capture_default_str();
  abl->add_option("--threads", abl_threads, "worker threads (0: all cores)")->capture_default_str();
  abl->add_option("--checkpoints", abl_checkpoints, "report checkpoints")->delimiter(',');

  // gradcheck
  auto* gc = app.add_subcommand("gradcheck", "finite-difference check of the adapter gradients");
  int gc_instances = 20;
  std::uint64_t gc_seed = 12345;
  gc->add_option("--instances", gc_instances, "random instances per loss")->capture_default_str();
  gc->add_option("--seed", gc_seed, "instance seed")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (*sim) {
      std::vector<std::string> flags;
      if (sim_patterns) flags.push_back("sim.num_patterns=" + std::to_string(*sim_patterns));
      if (sim_length) flags.push_back("sim.pattern_length=" + std::to_string(*sim_length));
      Options opts;
      build_options(opts, common, flags);
      std::uint64_t seed = 0;
      if (sim_seed) {
        seed = *sim_seed;
      } else {
        int found = 0;
        check(pfc_options_get_uint64(opts.p, "sim.seed", &seed, &found), "config");
      }
      Bench b;
      check(pfc_simulate(opts.p, shape.c_str(), seed, &b.p), "simulate");
      check(pfc_benchmark_save(b.p, sim_out.c_str()), "write");
      const size_t n = pfc_benchmark_num_patterns(b.p);
      double classes = 0.0;
      for (size_t i = 0; i < n; ++i) classes += static_cast<double>(pfc_benchmark_pattern_classes(b.p, i));
      std::printf("wrote %zu patterns x %zu observations (d=%zu, mean %.1f classes/pattern) to %s\n", n,
                  pfc_benchmark_pattern_length(b.p, 0), pfc_benchmark_feature_dim(b.p), classes / n,
                  sim_out.c_str());
    } else if (*run || *abl) {
      const bool is_run = run->parsed();
      const auto& cps = is_run ? run_checkpoints : abl_checkpoints;
      std::vector<std::string> flags;
      if (!cps.empty()) flags.push_back("checkpoints=" + join_ints(cps));
      if (is_run && alpha) flags.push_back("window.alpha=" + std::to_string(*alpha));
      Options opts;
      build_options(opts, common, flags);
      const std::uint64_t seed = is_run ? run_seed_v : abl_seed;
      Bench b;
      check(pfc_benchmark_load((is_run ? run_bench : abl_bench).c_str(), seed, &b.p), "benchmark");
      Report r;
      if (is_run)
        check(pfc_run(b.p, opts.p, methods.c_str(), run_backbone.c_str(), seed, run_threads, &r.p), "run");
      else
        check(pfc_ablate(b.p, opts.p, abl_backbone.c_str(), seed, abl_threads, &r.p), "ablate");
      const std::string& out = is_run ? run_out : abl_out;
      check(pfc_report_export(r.p, out.c_str()), "export");
      print_report(r.p);
      std::printf("reports written to %s\n", out.c_str());
    } else if (*gc) {
      int rc = 0;
      for (const char* loss : {"simsiam", "barlow"}) {
        size_t checked = 0, failures = 0;
        double max_rel = 0.0;
        const pfc_status st = pfc_gradcheck(loss, gc_instances, gc_seed, &checked, &failures, &max_rel);
        if (st != PFC_OK && st != PFC_ERR_NUMERICAL) check(st, "gradcheck");
        std::printf("%-8s %s  checked=%zu failures=%zu max_rel_error=%.3e\n", loss, st == PFC_OK ? "ok  " : "FAIL",
                    checked, failures, max_rel);
        if (st != PFC_OK) rc = PFC_ERR_NUMERICAL;
      }
      return rc;
    }
  } catch (const Failure& f) {
    return static_cast<int>(f.status);
  }
  return 0;
}
