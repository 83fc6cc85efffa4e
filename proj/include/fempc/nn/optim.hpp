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

#include "fempc/nn/params.hpp"

namespace fempc::nn {

struct OptimizerConfig {
  double learning_rate = 1e-3;
  double momentum = 0.9;

  void validate() const;
};

/// Heavy-ball SGD on every trainable tensor: v = momentum * v + g; w -= lr * v.
void sgd_step(const TensorList& params, const TensorList& grads, const TensorList& velocity,
              const OptimizerConfig& cfg);

}  // namespace fempc::nn
