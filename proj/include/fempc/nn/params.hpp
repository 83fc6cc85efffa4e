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
#include <string>
#include <vector>

#include "fempc/types.hpp"

namespace fempc::nn {

/// Named, shaped view of one parameter tensor owned elsewhere.
struct TensorRef {
  std::string name;
  std::vector<int> shape;
  std::span<double> values;
  bool trainable = true;
};

using TensorList = std::vector<TensorRef>;

inline TensorRef ref(std::string name, Matrix& m, bool trainable = true) {
  return {std::move(name), {static_cast<int>(m.rows()), static_cast<int>(m.cols())},
          {m.data(), static_cast<std::size_t>(m.size())}, trainable};
}

inline TensorRef ref(std::string name, Vector& v, bool trainable = true) {
  return {std::move(name), {static_cast<int>(v.size())}, {v.data(), static_cast<std::size_t>(v.size())}, trainable};
}

/// Number of trainable scalars.
std::size_t count_trainable(const TensorList& tensors);

/// Sets every value of every tensor (trainable or not) to zero.
void zero_all(const TensorList& tensors);

/// dst += scale * src over trainable tensors; lists must match.
void axpy_trainable(const TensorList& dst, const TensorList& src, double scale);

/// Throws InvalidArgument if the two lists differ in names or shapes.
void require_same_layout(const TensorList& a, const TensorList& b);

/// Any non-finite value in a trainable tensor.
bool all_finite(const TensorList& tensors);

}  // namespace fempc::nn
