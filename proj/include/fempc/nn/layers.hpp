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

#include "fempc/nn/params.hpp"
#include "fempc/nn/tensor.hpp"
#include "fempc/types.hpp"
#include "fempc/util.hpp"

namespace fempc::nn {

// Backward functions accumulate (+=) into gradient structures so that a
// batch can sum per-sample gradients in place.

struct LinearParams {
  Matrix weight;  // out x in
  Vector bias;    // out

  LinearParams() = default;
  LinearParams(int in, int out) : weight(Matrix::Zero(out, in)), bias(Vector::Zero(out)) {}
  int in() const { return static_cast<int>(weight.cols()); }
  int out() const { return static_cast<int>(weight.rows()); }
  void collect(TensorList& out, const std::string& prefix);
};

/// Uniform(-b, b) weights, b = sqrt(6 / (fan_in + fan_out)); zero bias.
void glorot_init(LinearParams& p, Rng& rng);
double glorot_bound(int fan_in, int fan_out);

/// Each row mapped by W row + b.
Matrix pointwise_linear(const Matrix& x, const LinearParams& p);
/// Returns dx; accumulates dW, db into grad.
Matrix pointwise_linear_backward(const Matrix& x, const Matrix& dy, const LinearParams& p, LinearParams& grad);

struct BatchNormState {
  Vector gamma, beta, running_mean, running_var;
  double momentum = 0.9;
  double eps = 1e-5;

  BatchNormState() = default;
  explicit BatchNormState(int channels)
      : gamma(Vector::Ones(channels)),
        beta(Vector::Zero(channels)),
        running_mean(Vector::Zero(channels)),
        running_var(Vector::Ones(channels)) {}
  int channels() const { return static_cast<int>(gamma.size()); }
  void collect(TensorList& out, const std::string& prefix);
};

struct BatchNormTape {
  Mode mode = Mode::kEval;
  Matrix xhat;
  RowVector inv_std;
  RowVector batch_mean;
  RowVector batch_var;
  RowVector norm_mean;  // mean actually subtracted, batch or running
};

/// Per-channel normalization over the rows of x: batch statistics in
/// train mode, running statistics in eval mode. Never mutates state.
Matrix batch_norm(const Matrix& x, const BatchNormState& s, Mode mode, BatchNormTape* tape = nullptr);
Matrix batch_norm_backward(const Matrix& dy, const BatchNormState& s, const BatchNormTape& tape, BatchNormState& grad);
/// running <- momentum * running + (1 - momentum) * batch, from a train-mode tape.
void update_running_stats(BatchNormState& s, const BatchNormTape& tape);

Matrix relu(const Matrix& x);
/// Passes dy where the forward output was strictly positive.
Matrix relu_backward(const Matrix& y, const Matrix& dy);

struct MaxPoolResult {
  RowVector values;
  std::vector<int> argmax;  // first maximizing row per column
};

MaxPoolResult global_max_pool(const Matrix& x);
Matrix global_max_pool_backward(const MaxPoolResult& pooled, const RowVector& dy, int rows);

struct Conv2dParams {
  Tensor kernel;  // out x in x 3 x 3
  Vector bias;

  Conv2dParams() = default;
  Conv2dParams(int in, int out) : kernel({out, in, 3, 3}), bias(Vector::Zero(out)) {}
  int in() const { return kernel.dim(1); }
  int out() const { return kernel.dim(0); }
  void collect(TensorList& out, const std::string& prefix);
};

/// Uniform(-b, b) with fan_in = 9 in, fan_out = 9 out; zero bias.
void glorot_init(Conv2dParams& p, Rng& rng);

/// 3x3 cross-correlation, stride 1, zero padding 1. image is C x R x R.
Tensor conv2d(const Tensor& image, const Conv2dParams& p);
/// Returns d(image); accumulates kernel and bias gradients.
Tensor conv2d_backward(const Tensor& image, const Tensor& dy, const Conv2dParams& p, Conv2dParams& grad);

struct MaxPool2dResult {
  Tensor values;             // C x R/2 x R/2
  std::vector<int> argmax;   // flat input index per output cell
};

/// 2x2 non-overlapping windows; ties go to the first cell in row-major order.
MaxPool2dResult max_pool2d(const Tensor& image);
Tensor max_pool2d_backward(const MaxPool2dResult& pooled, const Tensor& dy, const std::vector<int>& input_shape);

/// C x H x W  <->  (H*W) x C, so batch_norm can normalize image channels.
Matrix image_to_rows(const Tensor& image);
Tensor rows_to_image(const Matrix& rows, int c, int h, int w);

}  // namespace fempc::nn
