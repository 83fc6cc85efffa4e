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

#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "fempc/error.hpp"

namespace fempc::nn {

/// Dense row-major n-d array of doubles.
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::vector<int> shape, double fill = 0.0)
      : shape_(std::move(shape)), data_(count(shape_), fill) {}
  Tensor(std::vector<int> shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != count(shape_)) throw InvalidArgument("tensor data length does not match shape");
  }

  const std::vector<int>& shape() const { return shape_; }
  int dim(std::size_t i) const { return shape_.at(i); }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return data_.size(); }

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> values() { return data_; }
  std::span<const double> values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }

  /// Channel-major image access (c, r, col) for rank-3 tensors.
  double& at(int c, int r, int col) { return data_[(static_cast<std::size_t>(c) * shape_[1] + r) * shape_[2] + col]; }
  double at(int c, int r, int col) const {
    return data_[(static_cast<std::size_t>(c) * shape_[1] + r) * shape_[2] + col];
  }

  void fill(double v) { std::fill(data_.begin(), data_.end(), v); }
  bool operator==(const Tensor&) const = default;

  static std::size_t count(const std::vector<int>& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                           [](std::size_t a, int b) { return a * static_cast<std::size_t>(b); });
  }

 private:
  std::vector<int> shape_;
  std::vector<double> data_;
};

}  // namespace fempc::nn
