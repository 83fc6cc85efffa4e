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

#include <algorithm>
#include <cmath>
#include <map>

#include "doctest.h"
#include "fempc/error.hpp"
#include "fempc/models/cnn.hpp"
#include "fempc/models/projection.hpp"
#include "helpers.hpp"

using namespace fempc;
using namespace fempc::models;
using fempc::testing::random_cloud;
using fempc::testing::random_permutation;

namespace {

// Per-cell accumulation written independently of the library: each cell
// sums its members in ascending value order.
GrayImage image_oracle(const PointCloud& c, const ProjectionSpec& s) {
  std::map<std::pair<int, int>, std::vector<double>> cells;
  for (int i = 0; i < c.n_points(); ++i) {
    int rc[2];
    for (int a = 0; a < 2; ++a) {
      const auto& b = s.bounds[a];
      const double t = (c.data(i, s.plane[a]) - b.lo) / (b.hi - b.lo);
      rc[a] = std::min(s.resolution - 1, static_cast<int>(std::floor(t * s.resolution)));
    }
    cells[{rc[0], rc[1]}].push_back(c.data(i, c.spatial_dim + s.field_channel));
  }
  GrayImage img = GrayImage::Zero(s.resolution, s.resolution);
  for (auto& [rc, v] : cells) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    img(rc.first, rc.second) = sum;
  }
  return img;
}

ProjectionSpec unit_spec(int resolution) {
  ProjectionSpec s;
  s.resolution = resolution;
  s.bounds = {AxisBounds{-1.0, 1.0}, AxisBounds{-1.0, 1.0}};
  return s;
}

}  // namespace

TEST_CASE("accumulation example") {
  // Cells (0,0), (0,0), (1,1) with fields 2, 3, 5. Resolution must be at
  // least 4, so the example's 2x2 result is the top-left corner.
  Matrix m(3, 3);
  m << 0.1, 0.1, 2, 0.2, 0.2, 3, 0.3, 0.3, 5;
  ProjectionSpec s;
  s.resolution = 4;
  const GrayImage img = pointcloud_to_image({m, 2, 1}, s);
  GrayImage want(2, 2);
  want << 5, 0, 0, 5;
  CHECK(img.topLeftCorner(2, 2) == want);
  CHECK(img.sum() == 10.0);

  Matrix one(1, 3);
  one << 0.6, 0.2, 7;
  const GrayImage single = pointcloud_to_image({one, 2, 1}, s);
  CHECK(single(2, 0) == 7.0);
  CHECK((single.array() != 0.0).count() == 1);
  m.col(2).setZero();
  CHECK(pointcloud_to_image({m, 2, 1}, s).isZero());
}

TEST_CASE("quantize bins and bounds") {
  const AxisBounds b{0.0, 1.0};
  CHECK(quantize(0.0, b, 4) == 0);
  CHECK(quantize(0.25, b, 4) == 1);
  CHECK(quantize(1.0, b, 4) == 3);
  CHECK(quantize(1.5, b, 4) == -1);
  CHECK(quantize(-0.1, b, 4) == -1);
}

TEST_CASE("matches the oracle, conserves the sum and ignores point order") {
  Rng rng(41);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 1 + static_cast<int>(rng.below(300));
    const auto c = random_cloud(n, 2, 1, rng);
    const auto s = unit_spec(4 + static_cast<int>(rng.below(29)));
    const GrayImage img = pointcloud_to_image(c, s);
    REQUIRE(img == image_oracle(c, s));
    const double total = c.data.col(2).sum();
    CHECK(std::abs(img.sum() - total) <= 1e-9 * std::max(1.0, c.data.col(2).cwiseAbs().sum()));
    const auto p = random_permutation(n, rng);
    PointCloud shuffled = c;
    for (int i = 0; i < n; ++i) shuffled.data.row(i) = c.data.row(p[i]);
    CHECK(pointcloud_to_image(shuffled, s) == img);
  }
}

TEST_CASE("a point outside the bounds is an error naming it") {
  Matrix m(2, 3);
  m << 0.5, 0.5, 1, 1.5, 0.5, 1;
  CHECK_THROWS_WITH_AS(pointcloud_to_image({m, 2, 1}, ProjectionSpec{}), doctest::Contains("1"), InvalidArgument);
}

TEST_CASE("spec validation") {
  ProjectionSpec s;
  s.plane = {1, 1};
  CHECK_THROWS_AS(s.validate(2), InvalidArgument);
  s.plane = {1, 2};
  CHECK_THROWS_AS(s.validate(2), InvalidArgument);
  CHECK_NOTHROW(s.validate(3));
  CHECK(s.plane_name() == "yz");
  s.resolution = 3;
  CHECK_THROWS_AS(s.validate(3), InvalidArgument);
}

TEST_CASE("project_dataset uses shared bounds and keeps labels") {
  Rng rng(42);
  Dataset ds;
  for (int i = 0; i < 2; ++i) {
    ds.samples.push_back({"s" + std::to_string(i), random_cloud(20, 3, 1, rng), Label{i}});
  }
  ProjectionSpec xy;
  xy.resolution = 8;
  const auto a = project_dataset(ds, xy);
  CHECK(a.images.size() == 2);
  CHECK(a.labels == std::vector<int>{0, 1});
  const auto bounds = dataset_bounds(ds, {0, 1});
  for (int axis = 0; axis < 2; ++axis) {
    CHECK(a.spec.bounds[axis].lo == bounds[axis].lo);
    CHECK(a.spec.bounds[axis].hi == bounds[axis].hi);
  }
  ProjectionSpec yz = xy;
  yz.plane = {1, 2};
  const auto b = project_dataset(ds, yz);
  CHECK(b.images.size() == 2);
  CHECK(a.images[0] != b.images[0]);
  CHECK(a.sample_ids == std::vector<std::string>{"s0", "s1"});
}

TEST_CASE("cnn shapes, zero weights and gradient check") {
  const CnnConfig c;
  CHECK(c.final_side() == 8);
  const auto p = cnn_init(c);
  Rng rng(43);
  GrayImage img(64, 64);
  for (Eigen::Index i = 0; i < img.size(); ++i) img.data()[i] = rng.uniform(-1, 1);
  CnnTape tape;
  cnn_forward(p, img, Mode::kTrain, &tape);
  CHECK(tape.pooled.back().values.shape() == std::vector<int>{32, 8, 8});
  CHECK(tape.flat.size() == 32 * 8 * 8);

  auto z = p;
  nn::zero_all(z.tensors());
  const auto logits = cnn_forward(z, img, Mode::kEval);
  CHECK(logits[0] == 0.0);
  CHECK(logits[1] == 0.0);
  CHECK(cnn_predict(z, img).class_id == 0);
  CHECK_THROWS_AS(cnn_forward(p, GrayImage::Zero(32, 32), Mode::kEval), InvalidArgument);
  CnnConfig bad;
  bad.resolution = 36;
  CHECK_THROWS_AS(bad.validate(), InvalidArgument);
}
