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

#include "fempc/nn/loss.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fempc/error.hpp"

namespace fempc::nn {

LossResult softmax_cross_entropy(std::span<const double> logits, int true_class) {
  if (logits.empty()) throw InvalidArgument("softmax_cross_entropy: no logits");
  if (true_class < 0 || static_cast<std::size_t>(true_class) >= logits.size()) {
    throw InvalidArgument("softmax_cross_entropy: class " + std::to_string(true_class) + " out of range");
  }
  const double shift = *std::max_element(logits.begin(), logits.end());
  double denom = 0.0;
  for (double z : logits) denom += std::exp(z - shift);
  const double log_denom = std::log(denom);

  LossResult r;
  r.probs.resize(logits.size());
  r.grad.resize(logits.size());
  for (std::size_t c = 0; c < logits.size(); ++c) {
    r.probs[c] = std::exp(logits[c] - shift - log_denom);
    r.grad[c] = r.probs[c] - (static_cast<int>(c) == true_class ? 1.0 : 0.0);
  }
  // -log p_y = log sum exp(z - shift) - (z_y - shift)
  r.loss = log_denom - (logits[true_class] - shift);
  return r;
}

int argmax_class(std::span<const double> logits) {
  int best = 0;
  for (std::size_t c = 1; c < logits.size(); ++c) {
    if (logits[c] > logits[best]) best = static_cast<int>(c);
  }
  return best;
}

}  // namespace fempc::nn
