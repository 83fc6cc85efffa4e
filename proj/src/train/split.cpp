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

#include "fempc/train/split.hpp"

#include <algorithm>
#include <cmath>

#include "fempc/error.hpp"
#include "fempc/util.hpp"

namespace fempc::train {

Split split_dataset(const Dataset& dataset, double fraction, std::uint64_t seed) {
  const int n = static_cast<int>(dataset.size());
  if (n < 3) throw InvalidArgument("split_dataset: need at least 3 samples, got " + std::to_string(n));
  if (!(fraction > 0.0 && fraction < 1.0)) throw InvalidArgument("split_dataset: fraction must lie in (0, 1)");

  std::vector<int> by_class[2];
  for (int i = 0; i < n; ++i) by_class[dataset.samples[i].label.class_id].push_back(i);
  for (int c = 0; c < 2; ++c) {
    if (by_class[c].size() < 2) {
      throw InvalidArgument("split_dataset: class " + std::to_string(c) + " has fewer than 2 samples");
    }
  }

  // Per-class quotas: floor, then hand out the remainder by largest
  // fractional part (class 0 first on ties), clamped to [1, count - 1].
  const int n_train = static_cast<int>(std::lround(fraction * n));
  int quota[2];
  double frac_part[2];
  for (int c = 0; c < 2; ++c) {
    const double exact = fraction * static_cast<double>(by_class[c].size());
    quota[c] = static_cast<int>(std::floor(exact));
    frac_part[c] = exact - quota[c];
  }
  int remaining = n_train - quota[0] - quota[1];
  const int first = frac_part[1] > frac_part[0] ? 1 : 0;
  for (int step = 0; remaining > 0 && step < 2; ++step, --remaining) ++quota[step == 0 ? first : 1 - first];
  for (int c = 0; c < 2; ++c) quota[c] = std::clamp(quota[c], 1, static_cast<int>(by_class[c].size()) - 1);

  Rng rng(seed);
  Split s;
  for (int c = 0; c < 2; ++c) {
    rng.shuffle(by_class[c]);
    s.train.insert(s.train.end(), by_class[c].begin(), by_class[c].begin() + quota[c]);
    s.test.insert(s.test.end(), by_class[c].begin() + quota[c], by_class[c].end());
  }
  rng.shuffle(s.train);
  rng.shuffle(s.test);
  return s;
}

}  // namespace fempc::train
