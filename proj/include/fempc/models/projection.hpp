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
#include <filesystem>
#include <string>
#include <vector>

#include "fempc/point_cloud.hpp"
#include "fempc/util.hpp"

namespace fempc::models {

struct AxisBounds {
  double lo = 0.0;
  double hi = 1.0;
};

/// Which two spatial axes span the image plane, at what resolution, which
/// channel is accumulated, and the affine binning of each plane axis.
struct ProjectionSpec {
  std::array<int, 2> plane{0, 1};
  int resolution = 64;
  int field_channel = 0;
  std::array<AxisBounds, 2> bounds{};

  void validate(int spatial_dim) const;
  KeyValues to_key_values() const;
  static ProjectionSpec from_key_values(const KeyValues& kv);
  /// "xy", "yz", "xz" ...
  std::string plane_name() const;
};

/// R x R image; row index follows plane[0], column index plane[1].
using GrayImage = Matrix;

/// Equal-width bins over [lo, hi]; hi itself falls in the last bin.
/// Returns -1 for values outside the bounds.
int quantize(double v, const AxisBounds& b, int resolution);

/// Zero image, then each point's field value added into the cell of its
/// quantized plane coordinates. Points are accumulated in a canonical order
/// (cell, then value) so the result does not depend on row order.
GrayImage pointcloud_to_image(const PointCloud& cloud, const ProjectionSpec& spec);

struct ImageSet {
  ProjectionSpec spec;
  std::vector<std::string> sample_ids;
  std::vector<GrayImage> images;
  std::vector<int> labels;
};

/// Bounds of the plane axes over every point of every sample.
std::array<AxisBounds, 2> dataset_bounds(const Dataset& dataset, const std::array<int, 2>& plane);

/// Projects every sample with bounds computed once over the whole dataset;
/// spec.bounds is overwritten with those bounds.
ImageSet project_dataset(const Dataset& dataset, ProjectionSpec spec);

/// images_manifest.csv (sample_id,file,label), one text file of R rows of R
/// values per image, projection.txt with the spec.
void write_image_set(const ImageSet& set, const std::filesystem::path& dir);
ImageSet read_image_set(const std::filesystem::path& dir);

}  // namespace fempc::models
