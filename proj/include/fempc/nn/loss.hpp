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

#include <span>
#include <vector>

namespace fempc::nn {

struct LossResult {
  double loss = 0.0;
  std::vector<double> grad;  // d loss / d logits = softmax - onehot
  std::vector<double> probs;
};

/// Categorical cross-entropy of softmax(logits) against `true_class`,
/// evaluated in max-shifted form.
LossResult softmax_cross_entropy(std::span<const double> logits, int true_class);

/// argmax with ties resolved toward the lower class index.
int argmax_class(std::span<const double> logits);

}  // namespace fempc::nn
