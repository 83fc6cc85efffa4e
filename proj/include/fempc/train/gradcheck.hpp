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
#include <string>

#include "fempc/nn/grad_check.hpp"
#include "fempc/types.hpp"

namespace fempc::train {

struct GradCheckSetup {
  std::string model = "pointnet";  // linear | pointnet | dgcnn | cnn
  int n_points = 16;
  int k_neighbors = 4;
  int resolution = 8;              // cnn only
  Mode mode = Mode::kEval;         // batch-norm mode during the check
  std::uint64_t seed = 7;
  bool corrupt_backward = false;   // negative control: skews every gradient
};

struct ModelGradCheck {
  nn::GradCheckResult result;
  double threshold = 0.0;
  double seconds = 0.0;
  bool passed() const { return result.max_rel_error < threshold; }
};

/// Builds a small instance of the chosen model on random input with a
/// random label and compares its backward pass against finite differences.
/// Thresholds: 1e-6 for the linear layer, 1e-4 for full models.
ModelGradCheck run_model_gradcheck(const GradCheckSetup& setup);

}  // namespace fempc::train
