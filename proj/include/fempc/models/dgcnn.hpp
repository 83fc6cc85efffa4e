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
#include <span>
#include <vector>

#include "fempc/models/common.hpp"
#include "fempc/point_cloud.hpp"

namespace fempc::models {

struct DgcnnConfig {
  int k_neighbors = 10;
  int input_dim = 3;
  std::vector<int> edge_widths{64, 64, 128, 256};
  int embed_width = 1024;
  std::vector<int> head_widths{512, 256, 2};
  std::uint64_t init_seed = 0;

  void validate() const;
  KeyValues to_key_values() const;
  static DgcnnConfig from_key_values(const KeyValues& kv);
};

/// K nearest other points per row, by (squared distance, index).
struct KnnGraph {
  int n = 0;
  int k = 0;
  std::vector<int> neighbors;  // n x k, row-major

  std::span<const int> row(int i) const { return {neighbors.data() + static_cast<std::size_t>(i) * k, static_cast<std::size_t>(k)}; }
  bool operator==(const KnnGraph&) const = default;
};

/// Exhaustive search over the current feature space. Throws if K >= N.
KnnGraph knn_graph(const Matrix& features, int k);

/// Number of knn_graph calls made by this thread so far.
std::uint64_t knn_graph_calls();

/// Row (i*K + j) = concat(x_i, x_{n(i,j)} - x_i).
Matrix edge_features(const Matrix& features, const KnnGraph& graph);

struct EdgeConvTape {
  Matrix input;
  KnnGraph graph;
  Matrix center;            // A = x (W1 - W2)^T + b
  Matrix neighbor;          // B = x W2^T; edge (i, j) is A_i + B_n(i,j)
  nn::BatchNormTape bn;     // statistics only, no per-edge xhat
  Matrix output;            // N x F_out
  std::vector<int> argmax;  // winning neighbor slot per (point, channel)
};

/// KNN graph on x, linear map of every edge feature, batch norm over all
/// edges, relu, max over each point's K edges. The linear map is evaluated
/// per point and edges are never materialized: batch-norm statistics and
/// the max are streamed from the two per-point halves.
Matrix edge_conv(const Matrix& x, const nn::LinearParams& lin, const nn::BatchNormState& bn, int k, Mode mode,
                 EdgeConvTape* tape = nullptr);

/// Same function computed literally from edge_features; serial.
Matrix edge_conv_reference(const Matrix& x, const nn::LinearParams& lin, const nn::BatchNormState& bn, int k,
                           Mode mode);

/// Returns gradient w.r.t. x (the KNN graph is piecewise constant and
/// carries no gradient).
Matrix edge_conv_backward(const Matrix& dout, const nn::LinearParams& lin, const nn::BatchNormState& bn,
                          const EdgeConvTape& tape, nn::LinearParams& dlin, nn::BatchNormState& dbn);

struct DgcnnParams {
  std::vector<nn::LinearParams> edge;
  std::vector<nn::BatchNormState> edge_bn;
  nn::LinearParams embed;
  nn::BatchNormState embed_bn;
  std::vector<nn::LinearParams> head;
  int k_neighbors = 10;

  nn::TensorList tensors();
  std::vector<nn::BatchNormState*> batch_norms();
};

struct DgcnnTape {
  std::vector<EdgeConvTape> edge;
  Matrix concat;
  nn::BatchNormTape embed_bn;
  Matrix embedded;
  nn::MaxPoolResult pooled;
  HeadTape head;
};

DgcnnParams dgcnn_init(const DgcnnConfig& config);
std::size_t dgcnn_param_count(const DgcnnConfig& config);

Logits dgcnn_forward(const DgcnnParams& params, const Matrix& features, Mode mode, DgcnnTape* tape = nullptr);
Logits dgcnn_forward(const DgcnnParams& params, const PointCloud& cloud, Mode mode, DgcnnTape* tape = nullptr);
Matrix dgcnn_backward(const DgcnnParams& params, const DgcnnTape& tape, const Logits& dlogits, DgcnnParams& grads);
void dgcnn_update_stats(DgcnnParams& params, const DgcnnTape& tape);
Label dgcnn_predict(const DgcnnParams& params, const PointCloud& cloud);

}  // namespace fempc::models
