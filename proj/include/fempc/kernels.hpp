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

#include <vector>

#include "fempc/nn/tensor.hpp"
#include "fempc/types.hpp"

// Hot loops of the models. The top-level functions are OpenMP-parallel over
// independent output rows or channels, so results do not depend on the
// thread count. `serial::` holds plain single-threaded references that the
// tests and the benchmark compare against.
namespace fempc::kernels {

/// Sum over features of (a_i - b_j)^2, accumulated left to right.
double squared_distance(const double* a, const double* b, int width);

/// For each row, the k nearest other rows ordered by (squared distance,
/// index). Result is rows x k, row-major.
std::vector<int> knn(const Matrix& features, int k);

nn::Tensor conv2d_forward(const nn::Tensor& image, const nn::Tensor& kernel, const double* bias);
/// Gradient with respect to the input image.
nn::Tensor conv2d_input_grad(const nn::Tensor& dy, const nn::Tensor& kernel);
/// Accumulates kernel gradient.
void conv2d_kernel_grad(const nn::Tensor& image, const nn::Tensor& dy, nn::Tensor& dkernel);

namespace serial {

std::vector<int> knn(const Matrix& features, int k);
/// Max over each block of k consecutive rows; argmax holds the winning
/// slot j (first on ties) per (point, channel). Only the literal edge-conv
/// reference needs it, so there is no parallel twin.
Matrix block_max(const Matrix& x, int k, std::vector<int>& argmax);
nn::Tensor conv2d_forward(const nn::Tensor& image, const nn::Tensor& kernel, const double* bias);
nn::Tensor conv2d_input_grad(const nn::Tensor& dy, const nn::Tensor& kernel);
void conv2d_kernel_grad(const nn::Tensor& image, const nn::Tensor& dy, nn::Tensor& dkernel);

}  // namespace serial

}  // namespace fempc::kernels
