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
#include "fempc/point_cloud.hpp"

namespace fempc::models {

struct PointNetConfig {
  int input_dim = 3;
  std::vector<int> mlp_widths{64, 64, 64, 128, 1024};
  std::vector<int> head_widths{512, 256, 2};
  std::uint64_t init_seed = 0;

  void validate() const;
  KeyValues to_key_values() const;
  static PointNetConfig from_key_values(const KeyValues& kv);
};

struct PointNetParams {
  std::vector<nn::LinearParams> mlp;
  std::vector<nn::BatchNormState> mlp_bn;
  std::vector<nn::LinearParams> head;

  nn::TensorList tensors();
  std::vector<nn::BatchNormState*> batch_norms();
};

struct PointNetTape {
  std::vector<Matrix> inputs;  // input of each shared linear layer
  std::vector<nn::BatchNormTape> bn;
  std::vector<Matrix> activations;  // relu outputs
  nn::MaxPoolResult pooled;
  HeadTape head;
};

PointNetParams pointnet_init(const PointNetConfig& config);
std::size_t pointnet_param_count(const PointNetConfig& config);

/// Shared (linear -> batch norm -> relu) per point, max over points, head.
Logits pointnet_forward(const PointNetParams& params, const Matrix& features, Mode mode,
                        PointNetTape* tape = nullptr);
Logits pointnet_forward(const PointNetParams& params, const PointCloud& cloud, Mode mode,
                        PointNetTape* tape = nullptr);

/// Accumulates parameter gradients; returns gradient w.r.t. the input features.
Matrix pointnet_backward(const PointNetParams& params, const PointNetTape& tape, const Logits& dlogits,
                         PointNetParams& grads);

/// Folds the batch statistics of a train-mode tape into the running averages.
void pointnet_update_stats(PointNetParams& params, const PointNetTape& tape);

Label pointnet_predict(const PointNetParams& params, const PointCloud& cloud);

}  // namespace fempc::models
