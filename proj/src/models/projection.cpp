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

#include "fempc/models/projection.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "fempc/error.hpp"

namespace fempc::models {

namespace fs = std::filesystem;

void ProjectionSpec::validate(int spatial_dim) const {
  if (plane[0] == plane[1]) throw InvalidArgument("projection plane axes must be distinct");
  for (int a : plane) {
    if (a < 0 || a >= spatial_dim) {
      throw InvalidArgument("projection axis " + std::to_string(a) + " invalid for spatial_dim " +
                            std::to_string(spatial_dim));
    }
  }
  if (resolution < 4) throw InvalidArgument("projection resolution must be >= 4");
  if (field_channel < 0) throw InvalidArgument("projection field_channel must be >= 0");
  for (const auto& b : bounds) {
    if (!(b.lo <= b.hi) || !std::isfinite(b.lo) || !std::isfinite(b.hi)) {
      throw InvalidArgument("projection bounds must satisfy lo <= hi");
    }
  }
}

KeyValues ProjectionSpec::to_key_values() const {
  return {{"plane", std::to_string(plane[0]) + "," + std::to_string(plane[1])},
          {"resolution", std::to_string(resolution)},
          {"field_channel", std::to_string(field_channel)},
          {"bounds0", format_exact(bounds[0].lo) + "," + format_exact(bounds[0].hi)},
          {"bounds1", format_exact(bounds[1].lo) + "," + format_exact(bounds[1].hi)}};
}

ProjectionSpec ProjectionSpec::from_key_values(const KeyValues& kv) {
  ProjectionSpec s;
  for (const auto& [k, v] : kv) {
    if (k == "plane") {
      const auto p = parse_int_list(k, v);
      if (p.size() != 2) throw InvalidArgument("plane needs two axis indices");
      s.plane = {p[0], p[1]};
    } else if (k == "resolution") {
      s.resolution = static_cast<int>(parse_int(k, v));
    } else if (k == "field_channel") {
      s.field_channel = static_cast<int>(parse_int(k, v));
    } else if (k == "bounds0" || k == "bounds1") {
      const auto b = parse_double_list(k, v);
      if (b.size() != 2) throw InvalidArgument(k + " needs lo,hi");
      s.bounds[k == "bounds0" ? 0 : 1] = {b[0], b[1]};
    } else {
      throw InvalidArgument("projection: unknown key '" + k + "'");
    }
  }
  return s;
}

std::string ProjectionSpec::plane_name() const {
  static constexpr char kAxis[] = {'x', 'y', 'z'};
  std::string s;
  for (int a : plane) s += (a >= 0 && a < 3) ? kAxis[a] : '?';
  return s;
}

int quantize(double v, const AxisBounds& b, int resolution) {
  if (!(v >= b.lo && v <= b.hi)) return -1;
  if (b.hi == b.lo) return 0;
  const int cell = static_cast<int>(std::floor((v - b.lo) / (b.hi - b.lo) * resolution));
  return std::min(cell, resolution - 1);
}

GrayImage pointcloud_to_image(const PointCloud& cloud, const ProjectionSpec& spec) {
  require_valid(cloud);
  spec.validate(cloud.spatial_dim);
  if (spec.field_channel >= cloud.n_channels) {
    throw InvalidArgument("projection field_channel " + std::to_string(spec.field_channel) + " but cloud has " +
                          std::to_string(cloud.n_channels) + " channels");
  }
  const int r = spec.resolution;
  const int fcol = cloud.spatial_dim + spec.field_channel;
  struct Hit {
    int cell;
    double value;
  };
  std::vector<Hit> hits(cloud.n_points());
  for (int p = 0; p < cloud.n_points(); ++p) {
    const int u = quantize(cloud.data(p, spec.plane[0]), spec.bounds[0], r);
    const int v = quantize(cloud.data(p, spec.plane[1]), spec.bounds[1], r);
    if (u < 0 || v < 0) {
      throw InvalidArgument("point " + std::to_string(p) + " quantizes outside the " + std::to_string(r) + "x" +
                            std::to_string(r) + " image");
    }
    hits[p] = {u * r + v, cloud.data(p, fcol)};
  }
  std::sort(hits.begin(), hits.end(),
            [](const Hit& a, const Hit& b) { return a.cell != b.cell ? a.cell < b.cell : a.value < b.value; });
  GrayImage img = GrayImage::Zero(r, r);
  for (const auto& h : hits) img.data()[h.cell] += h.value;
  return img;
}

std::array<AxisBounds, 2> dataset_bounds(const Dataset& dataset, const std::array<int, 2>& plane) {
  std::array<AxisBounds, 2> b;
  for (int a = 0; a < 2; ++a) {
    b[a] = {std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const auto& s : dataset.samples) {
      if (plane[a] >= s.cloud.spatial_dim) throw InvalidArgument("projection axis exceeds spatial_dim");
      b[a].lo = std::min(b[a].lo, s.cloud.data.col(plane[a]).minCoeff());
      b[a].hi = std::max(b[a].hi, s.cloud.data.col(plane[a]).maxCoeff());
    }
  }
  return b;
}

ImageSet project_dataset(const Dataset& dataset, ProjectionSpec spec) {
  if (dataset.empty()) throw InvalidArgument("project_dataset: empty dataset");
  if (auto v = validate_dataset(dataset); !v) throw InvalidArgument("project_dataset: " + v.message);
  spec.validate(dataset.samples.front().cloud.spatial_dim);
  spec.bounds = dataset_bounds(dataset, spec.plane);
  ImageSet set;
  set.spec = spec;
  const int n = static_cast<int>(dataset.size());
  set.images.resize(n);
#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) set.images[i] = pointcloud_to_image(dataset.samples[i].cloud, spec);
  for (const auto& s : dataset.samples) {
    set.sample_ids.push_back(s.sample_id);
    set.labels.push_back(s.label.class_id);
  }
  return set;
}

void write_image_set(const ImageSet& set, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
  std::string manifest = "sample_id,file,label\n";
  for (std::size_t i = 0; i < set.images.size(); ++i) {
    const std::string file = set.sample_ids[i] + ".img.txt";
    std::string body;
    const auto& img = set.images[i];
    for (Eigen::Index r = 0; r < img.rows(); ++r) {
      for (Eigen::Index c = 0; c < img.cols(); ++c) {
        if (c) body += ' ';
        body += format_exact(img(r, c));
      }
      body += '\n';
    }
    write_file_atomic(dir / file, body);
    manifest += set.sample_ids[i] + "," + file + "," + std::to_string(set.labels[i]) + "\n";
  }
  write_file_atomic(dir / "projection.txt", render_key_values(set.spec.to_key_values()));
  write_file_atomic(dir / "images_manifest.csv", manifest);
}

ImageSet read_image_set(const fs::path& dir) {
  ImageSet set;
  set.spec = ProjectionSpec::from_key_values(read_key_values(dir / "projection.txt"));
  std::istringstream manifest(read_text_file(dir / "images_manifest.csv"));
  std::string line;
  std::getline(manifest, line);
  if (line != "sample_id,file,label") throw InvalidArgument("images_manifest.csv: unexpected header");
  const int r = set.spec.resolution;
  while (std::getline(manifest, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string id, file, label;
    std::getline(ss, id, ',');
    std::getline(ss, file, ',');
    std::getline(ss, label, ',');
    std::istringstream body(read_text_file(dir / file));
    GrayImage img(r, r);
    for (Eigen::Index i = 0; i < img.size(); ++i) {
      std::string tok;
      if (!(body >> tok)) throw InvalidArgument(file + ": too few values");
      img.data()[i] = parse_double(file, tok);
    }
    set.sample_ids.push_back(id);
    set.labels.push_back(static_cast<int>(parse_int("label", label)));
    set.images.push_back(std::move(img));
  }
  return set;
}

}  // namespace fempc::models
