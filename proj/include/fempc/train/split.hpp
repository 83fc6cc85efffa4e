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

#include "fempc/point_cloud.hpp"

namespace fempc::train {

struct Split {
  std::vector<int> train;
  std::vector<int> test;
};

/// Seeded stratified split: round(fraction * n) samples go to train, with
/// each class contributing within one sample of fraction * class_count and
/// at least one sample to each side. Both index lists are shuffled.
Split split_dataset(const Dataset& dataset, double fraction, std::uint64_t seed);

}  // namespace fempc::train
