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

#include "fempc/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "fempc/error.hpp"
#include "fempc/util.hpp"

namespace fempc::nn {

GradCheckResult grad_check(const std::function<double()>& loss, const TensorList& params, const TensorList& analytic,
                           const GradCheckOptions& opts) {
  require_same_layout(params, analytic);
  std::vector<std::pair<std::size_t, std::size_t>> coords;
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t].trainable) continue;
    for (std::size_t i = 0; i < params[t].values.size(); ++i) coords.emplace_back(t, i);
  }
  Rng rng(opts.seed);
  rng.shuffle(coords);
  if (coords.size() > opts.n_coords) coords.resize(opts.n_coords);
  std::sort(coords.begin(), coords.end());

  auto eval = [&] {
    const double l = loss();
    if (!std::isfinite(l)) throw NumericalError("grad_check: non-finite loss");
    return l;
  };
  eval();

  GradCheckResult r;
  for (const auto& [t, i] : coords) {
    double& w = params[t].values[i];
    const double saved = w;
    w = saved + opts.h;
    const double up = eval();
    w = saved - opts.h;
    const double down = eval();
    w = saved;
    const double numeric = (up - down) / (2.0 * opts.h);
    const double a = analytic[t].values[i];
    const double err = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-8});
    if (err > r.max_rel_error || r.coords_checked == 0) {
      r.max_rel_error = err;
      r.worst_tensor = params[t].name;
      r.worst_index = i;
      r.worst_analytic = a;
      r.worst_numeric = numeric;
    }
    ++r.coords_checked;
  }
  return r;
}

}  // namespace fempc::nn
