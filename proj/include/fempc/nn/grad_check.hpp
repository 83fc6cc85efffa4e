/* Copyright 2026 The fempc Authors. All Rights Reserved.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    http://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
==============================================================================*/

#pragma once

#include <cstdint>
#include <functional>
#include <string>

#include "fempc/nn/params.hpp"

namespace fempc::nn {

struct GradCheckOptions {
  double h = 1e-6;
  std::size_t n_coords = 200;
  std::uint64_t seed = 0;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords_checked = 0;
  std::string worst_tensor;
  std::size_t worst_index = 0;
  double worst_analytic = 0.0;
  double worst_numeric = 0.0;
};

/// Compares `analytic` against central differences of `loss` on a random
/// subset of trainable coordinates of `params` (all of them when fewer than
/// n_coords exist). `loss` must read the current values of `params`, which
/// are perturbed in place and restored. Relative error uses the
/// denominator max(|analytic|, |numeric|, 1e-8).
GradCheckResult grad_check(const std::function<double()>& loss, const TensorList& params, const TensorList& analytic,
                           const GradCheckOptions& opts = {});

}  // namespace fempc::nn
