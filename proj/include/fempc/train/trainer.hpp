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

#include <chrono>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "fempc/error.hpp"
#include "fempc/models/cnn.hpp"
#include "fempc/models/dgcnn.hpp"
#include "fempc/models/pointnet.hpp"
#include "fempc/nn/loss.hpp"
#include "fempc/nn/optim.hpp"

namespace fempc::train {

struct TrainingConfig {
  int epochs = 20;
  int batch_size = 2;
  nn::OptimizerConfig optimizer;
  double split_train_fraction = 2.0 / 3.0;
  std::uint64_t split_seed = 0;
  std::uint64_t shuffle_seed = 0;
  bool shuffle_each_epoch = true;
  /// kTrain normalizes each cloud by its own batch-norm statistics;
  /// kTrainRunning normalizes by the running ones, exactly as at eval.
  Mode train_mode = Mode::kTrainRunning;
  /// Weight of the old running statistics in each per-cloud update.
  double bn_momentum = 0.99;

  void validate() const;
  KeyValues to_key_values() const;
};

/// Positive class is 1 (high noise).
struct Confusion {
  int tp = 0, tn = 0, fp = 0, fn = 0;

  int total() const { return tp + tn + fp + fn; }
  double accuracy() const { return total() ? static_cast<double>(tp + tn) / total() : 0.0; }
  void add(int predicted, int actual);
  bool operator==(const Confusion&) const = default;
};

struct Metrics {
  std::vector<double> epoch_loss;  // mean training loss per epoch
  Confusion confusion;
  double test_accuracy = 0.0;
  double wall_seconds = 0.0;
  std::string config_digest;
};

/// `epoch,mean_loss` rows then a `test_accuracy,<value>` footer, 6 significant digits.
std::string metrics_csv(const Metrics& m);

// Adapters giving the three models one shape for the training loop.

struct PointNetModel {
  using Params = models::PointNetParams;
  using Tape = models::PointNetTape;
  using Input = Matrix;
  static constexpr const char* kTag = "pointnet";
  models::PointNetConfig config;

  Params init() const { return models::pointnet_init(config); }
  models::Logits forward(const Params& p, const Input& x, Mode m, Tape* t) const {
    return models::pointnet_forward(p, x, m, t);
  }
  void backward(const Params& p, const Tape& t, const models::Logits& d, Params& g) const {
    models::pointnet_backward(p, t, d, g);
  }
  void update_stats(Params& p, const Tape& t) const { models::pointnet_update_stats(p, t); }
};

struct DgcnnModel {
  using Params = models::DgcnnParams;
  using Tape = models::DgcnnTape;
  using Input = Matrix;
  static constexpr const char* kTag = "dgcnn";
  models::DgcnnConfig config;

  Params init() const { return models::dgcnn_init(config); }
  models::Logits forward(const Params& p, const Input& x, Mode m, Tape* t) const {
    return models::dgcnn_forward(p, x, m, t);
  }
  void backward(const Params& p, const Tape& t, const models::Logits& d, Params& g) const {
    models::dgcnn_backward(p, t, d, g);
  }
  void update_stats(Params& p, const Tape& t) const { models::dgcnn_update_stats(p, t); }
};

struct CnnModel {
  using Params = models::CnnParams;
  using Tape = models::CnnTape;
  using Input = models::GrayImage;
  static constexpr const char* kTag = "cnn";
  models::CnnConfig config;

  Params init() const { return models::cnn_init(config); }
  models::Logits forward(const Params& p, const Input& x, Mode m, Tape* t) const {
    return models::cnn_forward(p, x, m, t);
  }
  void backward(const Params& p, const Tape& t, const models::Logits& d, Params& g) const {
    models::cnn_backward(p, t, d, g);
  }
  void update_stats(Params& p, const Tape& t) const { models::cnn_update_stats(p, t); }
};

template <class Model>
struct Trained {
  typename Model::Params params;
  Metrics metrics;
};

/// A zero-valued copy with the same layout.
template <class Params>
Params zeros_like(const Params& p) {
  Params z = p;
  nn::zero_all(z.tensors());
  return z;
}

/// Mini-batch SGD: per batch, every sample is forwarded in train mode and
/// back-propagated on its own; gradients are averaged and one sgd_step is
/// taken. Batch-norm running statistics are folded in sample by sample.
template <class Model>
Trained<Model> train_model(const Model& model, std::span<const typename Model::Input> inputs,
                           std::span<const int> labels, const TrainingConfig& cfg,
                           typename Model::Params initial) {
  cfg.validate();
  if (inputs.size() != labels.size() || inputs.empty()) {
    throw InvalidArgument("train_model: need matching, nonempty inputs and labels");
  }
  const auto start = std::chrono::steady_clock::now();
  Trained<Model> out{std::move(initial), {}};
  auto& params = out.params;
  for (auto* bn : params.batch_norms()) bn->momentum = cfg.bn_momentum;
  auto grads = zeros_like(params);
  auto velocity = zeros_like(params);
  const auto p_list = params.tensors();
  const auto g_list = grads.tensors();
  const auto v_list = velocity.tensors();

  std::vector<int> order(inputs.size());
  std::iota(order.begin(), order.end(), 0);
  typename Model::Tape tape;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    if (cfg.shuffle_each_epoch) {
      Rng rng(derive_seed(cfg.shuffle_seed, static_cast<std::uint64_t>(epoch)));
      rng.shuffle(order);
    }
    double loss_sum = 0.0;
    int batch = 0;
    for (std::size_t b = 0; b < order.size(); b += cfg.batch_size, ++batch) {
      const std::size_t end = std::min(order.size(), b + static_cast<std::size_t>(cfg.batch_size));
      const double inv = 1.0 / static_cast<double>(end - b);
      nn::zero_all(g_list);
      for (std::size_t s = b; s < end; ++s) {
        const int i = order[s];
        const auto logits = model.forward(params, inputs[i], cfg.train_mode, &tape);
        const auto loss = nn::softmax_cross_entropy(logits, labels[i]);
        if (!std::isfinite(loss.loss)) {
          throw NumericalError("non-finite loss at epoch " + std::to_string(epoch + 1) + ", batch " +
                               std::to_string(batch + 1));
        }
        loss_sum += loss.loss;
        model.backward(params, tape, {loss.grad[0] * inv, loss.grad[1] * inv}, grads);
        model.update_stats(params, tape);
      }
      nn::sgd_step(p_list, g_list, v_list, cfg.optimizer);
      if (!nn::all_finite(p_list)) {
        throw NumericalError("non-finite parameters at epoch " + std::to_string(epoch + 1) + ", batch " +
                             std::to_string(batch + 1));
      }
    }
    out.metrics.epoch_loss.push_back(loss_sum / static_cast<double>(order.size()));
  }
  out.metrics.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

template <class Model>
Trained<Model> train_model(const Model& model, std::span<const typename Model::Input> inputs,
                           std::span<const int> labels, const TrainingConfig& cfg) {
  return train_model(model, inputs, labels, cfg, model.init());
}

/// Eval-mode predictions, one per input.
template <class Model>
std::vector<int> predict_all(const Model& model, const typename Model::Params& params,
                             std::span<const typename Model::Input> inputs) {
  std::vector<int> pred(inputs.size());
  const int n = static_cast<int>(inputs.size());
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) pred[i] = models::predict_class(model.forward(params, inputs[i], Mode::kEval, nullptr));
  return pred;
}

/// Confusion counts from paired predictions and labels.
Confusion confusion_of(std::span<const int> predicted, std::span<const int> actual);

template <class Model>
Confusion evaluate_accuracy(const Model& model, const typename Model::Params& params,
                            std::span<const typename Model::Input> inputs, std::span<const int> labels) {
  if (inputs.empty()) throw InvalidArgument("evaluate_accuracy: empty test set");
  const auto pred = predict_all(model, params, inputs);
  return confusion_of(pred, labels);
}

}  // namespace fempc::train
