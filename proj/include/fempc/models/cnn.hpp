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
#include <vector>

#include "fempc/models/common.hpp"
#include "fempc/models/projection.hpp"

namespace fempc::models {

struct CnnConfig {
  int resolution = 64;
  std::vector<int> channels{8, 16, 32};
  int epochs = 25;
  std::uint64_t init_seed = 0;

  void validate() const;
  KeyValues to_key_values() const;
  static CnnConfig from_key_values(const KeyValues& kv);
  /// Side of the last feature map.
  int final_side() const { return resolution >> channels.size(); }
};

struct CnnParams {
  std::vector<nn::Conv2dParams> conv;
  std::vector<nn::BatchNormState> bn;
  nn::LinearParams head;  // flattened C x s x s -> 2

  nn::TensorList tensors();
  std::vector<nn::BatchNormState*> batch_norms();
};

struct CnnTape {
  std::vector<nn::Tensor> inputs;     // input of each conv
  std::vector<nn::BatchNormTape> bn;
  std::vector<nn::Tensor> activated;  // relu output before pooling
  std::vector<nn::MaxPool2dResult> pooled;
  RowVector flat;
};

CnnParams cnn_init(const CnnConfig& config);

/// Three (conv -> batch norm -> relu -> 2x2 max pool) blocks, flatten, linear.
Logits cnn_forward(const CnnParams& params, const GrayImage& image, Mode mode, CnnTape* tape = nullptr);
void cnn_backward(const CnnParams& params, const CnnTape& tape, const Logits& dlogits, CnnParams& grads);
void cnn_update_stats(CnnParams& params, const CnnTape& tape);
Label cnn_predict(const CnnParams& params, const GrayImage& image);

}  // namespace fempc::models
