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

#include "fempc/nn/optim.hpp"

#include "fempc/error.hpp"

namespace fempc::nn {

void OptimizerConfig::validate() const {
  if (!(learning_rate > 0.0)) throw InvalidArgument("learning_rate must be > 0");
  if (!(momentum >= 0.0 && momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
}

void sgd_step(const TensorList& params, const TensorList& grads, const TensorList& velocity,
              const OptimizerConfig& cfg) {
  require_same_layout(params, grads);
  require_same_layout(params, velocity);
  for (std::size_t t = 0; t < params.size(); ++t) {
    if (!params[t].trainable) continue;
    auto w = params[t].values;
    auto g = grads[t].values;
    auto v = velocity[t].values;
    for (std::size_t i = 0; i < w.size(); ++i) {
      v[i] = cfg.momentum * v[i] + g[i];
      w[i] -= cfg.learning_rate * v[i];
    }
  }
}

}  // namespace fempc::nn
