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

#include "fempc/nn/params.hpp"

#include <algorithm>
#include <cmath>

#include "fempc/error.hpp"

namespace fempc::nn {

std::size_t count_trainable(const TensorList& tensors) {
  std::size_t n = 0;
  for (const auto& t : tensors) {
    if (t.trainable) n += t.values.size();
  }
  return n;
}

void zero_all(const TensorList& tensors) {
  for (const auto& t : tensors) std::fill(t.values.begin(), t.values.end(), 0.0);
}

void require_same_layout(const TensorList& a, const TensorList& b) {
  if (a.size() != b.size()) throw InvalidArgument("parameter lists differ in length");
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].name != b[i].name || a[i].shape != b[i].shape) {
      throw InvalidArgument("parameter layout mismatch at '" + a[i].name + "' vs '" + b[i].name + "'");
    }
  }
}

void axpy_trainable(const TensorList& dst, const TensorList& src, double scale) {
  require_same_layout(dst, src);
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (!dst[i].trainable) continue;
    for (std::size_t j = 0; j < dst[i].values.size(); ++j) dst[i].values[j] += scale * src[i].values[j];
  }
}

bool all_finite(const TensorList& tensors) {
  for (const auto& t : tensors) {
    if (!t.trainable) continue;
    for (double v : t.values) {
      if (!std::isfinite(v)) return false;
    }
  }
  return true;
}

}  // namespace fempc::nn
