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

#pragma once

#include <cstdint>
#include <functional>

#include "perfood/adapt.hpp"

namespace perfood {

struct GradCheckOptions {
  int instances = 20;
  int dim = 8;
  int groups = 2;
  int batch_size = 4;
  double step = 1e-5;
  double tolerance = 1e-4;  // relative error
  double skip_below = 1e-8;  // entries where both magnitudes are smaller are skipped
  double weight_decay = 1e-4;
  double barlow_lambda = 0.005;
  std::uint64_t seed = 12345;
};

struct GradCheckReport {
  LossKind loss = LossKind::SimSiam;
  int instances = 0;
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t failures = 0;
  double max_rel_error = 0.0;

  bool ok() const { return failures == 0 && checked > 0; }
};

/// A random adapter instance kept away from ReLU kinks.
struct GradCheckInstance {
  AdapterParams params;
  std::vector<FeaturePair> batch;
};

GradCheckInstance make_gradcheck_instance(const GradCheckOptions& opts, Rng& rng);

/// Relative error |a - n| / max(|a|, |n|); zero when both are zero.
double relative_error(double analytic, double numeric);

/// Central differences of `loss` around `params`, compared to `analytic`.
void compare_with_finite_differences(const AdapterParams& params, const AdapterParams& analytic,
                                     const std::function<long double(const AdapterParams&)>& loss,
                                     const GradCheckOptions& opts, GradCheckReport& report);

/// Straightforward long-double evaluations of the two objectives (loss only).
long double reference_simsiam_loss(const AdapterParams& params, std::span<const FeaturePair> batch,
                                   const Mat& target1, const Mat& target2, double weight_decay);
long double reference_barlow_loss(const AdapterParams& params, std::span<const FeaturePair> batch, double lambda,
                                  double weight_decay);

GradCheckReport run_gradcheck(LossKind loss, const GradCheckOptions& opts = {});

}  // namespace perfood
