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
#include <map>
#include <span>
#include <string>
#include <vector>

#include "fempc/types.hpp"

namespace fempc {

/// N points, each a row of `spatial_dim` coordinates followed by
/// `n_channels` field values.
struct PointCloud {
  int spatial_dim = 2;
  int n_channels = 0;
  Matrix data;

  PointCloud() = default;
  PointCloud(Matrix m, int d, int c) : spatial_dim(d), n_channels(c), data(std::move(m)) {}

  int n_points() const { return static_cast<int>(data.rows()); }
  int width() const { return spatial_dim + n_channels; }

  bool operator==(const PointCloud& o) const {
    return spatial_dim == o.spatial_dim && n_channels == o.n_channels &&
           data.rows() == o.data.rows() && data.cols() == o.data.cols() && data == o.data;
  }
};

/// Binary class: 0 = low noise in the window region, 1 = high noise.
struct Label {
  int class_id = 0;

  static Label from_int(int v);
  bool operator==(const Label&) const = default;
};

struct LabeledSample {
  std::string sample_id;
  PointCloud cloud;
  Label label;
};

struct Dataset {
  std::vector<LabeledSample> samples;
  std::map<std::string, std::string> metadata;

  std::size_t size() const { return samples.size(); }
  bool empty() const { return samples.empty(); }
};

struct ValidationResult {
  bool ok = true;
  std::string message;
  int row = -1;
  int col = -1;

  explicit operator bool() const { return ok; }
  static ValidationResult success() { return {}; }
  static ValidationResult failure(std::string msg, int row = -1, int col = -1) {
    return {false, std::move(msg), row, col};
  }
};

/// Checks every PointCloud invariant; reports the first violation.
ValidationResult validate_cloud(const PointCloud& cloud);

/// Shared dims, distinct ids, valid clouds and labels.
ValidationResult validate_dataset(const Dataset& dataset);

/// Throws InvalidArgument carrying the validation message.
void require_valid(const PointCloud& cloud);

/// Centers coordinates on the centroid and scales them into the unit ball;
/// standardizes every channel to zero mean and unit variance. Zero-spread
/// coordinates or channels are only translated.
PointCloud normalize_spatial(const PointCloud& cloud);

/// Normalizes coordinates like normalize_spatial but maps channels with a
/// caller-supplied affine (value - mean[c]) / scale[c].
PointCloud normalize_with_channel_stats(const PointCloud& cloud, std::span<const double> mean,
                                        std::span<const double> scale);

/// Row i of the result is row perm[i] of the input.
PointCloud permuted_view(const PointCloud& cloud, std::span<const int> perm);

/// Inverse of a bijection on 0..n-1.
std::vector<int> invert_permutation(std::span<const int> perm);

}  // namespace fempc
