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

#include <array>
#include <vector>

#include "fempc/nn/layers.hpp"

namespace fempc::models {

using Logits = std::array<double, 2>;

/// Hidden layers are linear -> relu, the last layer is a plain linear map
/// to the two logits.
struct HeadTape {
  std::vector<RowVector> inputs;  // input to each linear layer
  std::vector<RowVector> outputs; // relu output of each hidden layer
};

Logits head_forward(const std::vector<nn::LinearParams>& head, const RowVector& in, HeadTape* tape);
/// Returns gradient with respect to the head input.
RowVector head_backward(const std::vector<nn::LinearParams>& head, const HeadTape& tape, const Logits& dlogits,
                        std::vector<nn::LinearParams>& grads);

/// Builds linear layers in -> widths[0] -> ... with Glorot weights.
std::vector<nn::LinearParams> make_linear_chain(int in, const std::vector<int>& widths, Rng& rng);

/// argmax with ties toward class 0.
int predict_class(const Logits& logits);

void require_widths(const std::vector<int>& widths, const char* what);

}  // namespace fempc::models
