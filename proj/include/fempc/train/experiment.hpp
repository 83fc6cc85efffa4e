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

#include <string>
#include <variant>
#include <vector>

#include "fempc/nn/checkpoint.hpp"
#include "fempc/train/split.hpp"
#include "fempc/train/trainer.hpp"

namespace fempc::train {

/// How feature channels are scaled before entering a model. Coordinates are
/// always centered and scaled into the unit ball per cloud.
enum class ChannelNorm {
  kPerCloud,  // zero mean, unit variance within each cloud
  kDataset,   // one affine map per channel, fitted on the training split
};

std::string to_string(ChannelNorm n);
ChannelNorm channel_norm_from_string(const std::string& s);

struct InputSpec {
  ChannelNorm channel_norm = ChannelNorm::kDataset;
  std::vector<double> channel_mean;
  std::vector<double> channel_scale;

  KeyValues to_key_values() const;
  static InputSpec from_key_values(const KeyValues& kv);
};

/// Fits dataset-level channel statistics on `fit_indices` when requested.
InputSpec fit_input_spec(const Dataset& dataset, std::span<const int> fit_indices, ChannelNorm norm);
PointCloud prepare_cloud(const PointCloud& cloud, const InputSpec& spec);

/// Everything one training run needs besides the data.
struct ExperimentConfig {
  TrainingConfig training;
  models::PointNetConfig pointnet;
  models::DgcnnConfig dgcnn;
  models::CnnConfig cnn;
  models::ProjectionSpec projection;
  ChannelNorm channel_norm = ChannelNorm::kDataset;

  /// Flat keys: training keys bare, model keys prefixed "pointnet.",
  /// "dgcnn.", "cnn.", "projection.".
  KeyValues to_key_values() const;
  /// Applies recognised keys; returns the unrecognised ones.
  std::vector<std::string> apply(const KeyValues& kv);
  std::string digest() const;
};

using AnyParams = std::variant<models::PointNetParams, models::DgcnnParams, models::CnnParams>;

/// A trained model plus what is needed to rebuild its inputs.
struct ModelRun {
  std::string model_type;  // "pointnet" | "dgcnn" | "cnn"
  KeyValues header;        // model config, input spec, split, projection
  AnyParams params;
  Metrics metrics;

  nn::TensorList tensors();
};

/// Split, normalize, train the chosen model and evaluate it on the test split.
ModelRun train_and_evaluate(const Dataset& dataset, const std::string& model_type, const ExperimentConfig& cfg);

/// Same, on a precomputed split (used by sweeps and comparisons).
ModelRun train_and_evaluate(const Dataset& dataset, const Split& split, const std::string& model_type,
                            const ExperimentConfig& cfg);

void save_model(const ModelRun& run, const std::filesystem::path& path);
ModelRun load_model(const std::filesystem::path& path);

/// Re-creates the recorded split (or uses every sample) and evaluates.
Confusion evaluate_model(ModelRun& run, const Dataset& dataset, bool all_samples);

struct SweepRow {
  int k = 0;
  double accuracy = 0.0;
};

/// Fresh DGCNN per K (init seed derived from the base seed and K), same split.
std::vector<SweepRow> k_sweep(const Dataset& dataset, const std::vector<int>& ks, const ExperimentConfig& cfg);
std::string sweep_csv(const std::vector<SweepRow>& rows);

struct ComparisonRow {
  std::string model;
  double accuracy = 0.0;
};

/// CNN on each projection plane (xy, plus yz for 3-D data), PointNet and
/// DGCNN(K = cfg.dgcnn.k_neighbors), all on one split.
std::vector<ComparisonRow> model_comparison(const Dataset& dataset, const ExperimentConfig& cfg);
std::string comparison_csv(const std::vector<ComparisonRow>& rows);

}  // namespace fempc::train
