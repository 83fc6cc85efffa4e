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

#include "fempc/point_cloud.hpp"

#include <cmath>
#include <set>

#include "fempc/error.hpp"

namespace fempc {

Label Label::from_int(int v) {
  if (v != 0 && v != 1) throw InvalidArgument("label must be 0 or 1, got " + std::to_string(v));
  return Label{v};
}

ValidationResult validate_cloud(const PointCloud& cloud) {
  if (cloud.n_points() < 1) return ValidationResult::failure("n_points >= 1 violated: cloud is empty");
  if (cloud.spatial_dim != 2 && cloud.spatial_dim != 3) {
    return ValidationResult::failure("spatial_dim must be 2 or 3, got " + std::to_string(cloud.spatial_dim));
  }
  if (cloud.n_channels < 0) return ValidationResult::failure("n_channels must be >= 0");
  if (cloud.data.cols() != cloud.width()) {
    return ValidationResult::failure("column count " + std::to_string(cloud.data.cols()) +
                                     " != spatial_dim + n_channels = " + std::to_string(cloud.width()));
  }
  for (Eigen::Index r = 0; r < cloud.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < cloud.data.cols(); ++c) {
      if (!std::isfinite(cloud.data(r, c))) {
        return ValidationResult::failure(
            "non-finite entry at row " + std::to_string(r) + ", column " + std::to_string(c),
            static_cast<int>(r), static_cast<int>(c));
      }
    }
  }
  return ValidationResult::success();
}

ValidationResult validate_dataset(const Dataset& dataset) {
  std::set<std::string> ids;
  for (std::size_t i = 0; i < dataset.samples.size(); ++i) {
    const auto& s = dataset.samples[i];
    if (auto v = validate_cloud(s.cloud); !v) {
      v.message = "sample '" + s.sample_id + "': " + v.message;
      return v;
    }
    if (s.label.class_id != 0 && s.label.class_id != 1) {
      return ValidationResult::failure("sample '" + s.sample_id + "': label not in {0,1}");
    }
    if (!ids.insert(s.sample_id).second) {
      return ValidationResult::failure("duplicate sample_id '" + s.sample_id + "'");
    }
    const auto& first = dataset.samples.front().cloud;
    if (s.cloud.spatial_dim != first.spatial_dim || s.cloud.n_channels != first.n_channels) {
      return ValidationResult::failure("sample '" + s.sample_id + "': dims differ from first sample");
    }
  }
  return ValidationResult::success();
}

void require_valid(const PointCloud& cloud) {
  if (auto v = validate_cloud(cloud); !v) throw InvalidArgument(v.message);
}

namespace {

void normalize_coords(Matrix& m, int d) {
  auto coords = m.leftCols(d);
  const RowVector centroid = coords.colwise().mean();
  coords.rowwise() -= centroid;
  const double radius = coords.rowwise().norm().maxCoeff();
  if (radius > 0.0) coords /= radius;
}

}  // namespace

PointCloud normalize_spatial(const PointCloud& cloud) {
  require_valid(cloud);
  PointCloud out = cloud;
  normalize_coords(out.data, cloud.spatial_dim);
  const double n = cloud.n_points();
  for (int c = 0; c < cloud.n_channels; ++c) {
    auto col = out.data.col(cloud.spatial_dim + c);
    const double mean = col.mean();
    col.array() -= mean;
    const double var = col.squaredNorm() / n;
    if (var > 0.0) col /= std::sqrt(var);
  }
  return out;
}

PointCloud normalize_with_channel_stats(const PointCloud& cloud, std::span<const double> mean,
                                        std::span<const double> scale) {
  require_valid(cloud);
  if (mean.size() != static_cast<std::size_t>(cloud.n_channels) || scale.size() != mean.size()) {
    throw InvalidArgument("channel statistics do not match n_channels");
  }
  PointCloud out = cloud;
  normalize_coords(out.data, cloud.spatial_dim);
  for (int c = 0; c < cloud.n_channels; ++c) {
    auto col = out.data.col(cloud.spatial_dim + c);
    col.array() -= mean[c];
    if (scale[c] > 0.0) col /= scale[c];
  }
  return out;
}

std::vector<int> invert_permutation(std::span<const int> perm) {
  std::vector<int> inv(perm.size(), -1);
  for (std::size_t i = 0; i < perm.size(); ++i) {
    const int p = perm[i];
    if (p < 0 || static_cast<std::size_t>(p) >= perm.size() || inv[p] != -1) {
      throw InvalidArgument("permutation is not a bijection (entry " + std::to_string(i) + ")");
    }
    inv[p] = static_cast<int>(i);
  }
  return inv;
}

PointCloud permuted_view(const PointCloud& cloud, std::span<const int> perm) {
  if (perm.size() != static_cast<std::size_t>(cloud.n_points())) {
    throw InvalidArgument("permutation length " + std::to_string(perm.size()) + " != n_points " +
                          std::to_string(cloud.n_points()));
  }
  invert_permutation(perm);  // bijection check
  PointCloud out(Matrix(cloud.data.rows(), cloud.data.cols()), cloud.spatial_dim, cloud.n_channels);
  for (std::size_t i = 0; i < perm.size(); ++i) out.data.row(i) = cloud.data.row(perm[i]);
  return out;
}

}  // namespace fempc
