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

// Parallel kernels against their serial references, and DGCNN forward time
// as K grows. Run with OMP_NUM_THREADS set to compare thread counts.

#include <benchmark/benchmark.h>

#include "fempc/kernels.hpp"
#include "fempc/models/dgcnn.hpp"
#include "fempc/util.hpp"

namespace {

using fempc::Matrix;
using fempc::nn::Tensor;

Matrix random_cloud(int n, int width, std::uint64_t seed) {
  fempc::Rng rng(seed);
  Matrix m(n, width);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

Tensor random_tensor(std::vector<int> shape, std::uint64_t seed) {
  fempc::Rng rng(seed);
  Tensor t(std::move(shape));
  for (auto& v : t.values()) v = rng.uniform(-1.0, 1.0);
  return t;
}

template <bool kParallel>
void BM_Knn(benchmark::State& state) {
  const Matrix x = random_cloud(static_cast<int>(state.range(0)), 64, 1);
  for (auto _ : state) {
    auto nb = kParallel ? fempc::kernels::knn(x, 20) : fempc::kernels::serial::knn(x, 20);
    benchmark::DoNotOptimize(nb.data());
  }
}
BENCHMARK(BM_Knn<true>)->Name("knn/parallel")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Knn<false>)->Name("knn/serial")->Arg(256)->Arg(1024)->Unit(benchmark::kMillisecond);

template <bool kParallel>
void BM_Conv2d(benchmark::State& state) {
  const int r = static_cast<int>(state.range(0));
  const Tensor image = random_tensor({4, r, r}, 2);
  const Tensor kernel = random_tensor({8, 4, 3, 3}, 3);
  const std::vector<double> bias(8, 0.1);
  for (auto _ : state) {
    Tensor y = kParallel ? fempc::kernels::conv2d_forward(image, kernel, bias.data())
                         : fempc::kernels::serial::conv2d_forward(image, kernel, bias.data());
    benchmark::DoNotOptimize(y.values().data());
  }
}
BENCHMARK(BM_Conv2d<true>)->Name("conv2d/parallel")->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);
BENCHMARK(BM_Conv2d<false>)->Name("conv2d/serial")->Arg(32)->Arg(64)->Unit(benchmark::kMicrosecond);

// Forward time should not decrease with K at fixed N.
void BM_DgcnnForward(benchmark::State& state) {
  fempc::models::DgcnnConfig cfg;
  cfg.k_neighbors = static_cast<int>(state.range(0));
  cfg.init_seed = 4;
  const auto params = fempc::models::dgcnn_init(cfg);
  const Matrix x = random_cloud(1024, 3, 5);
  for (auto _ : state) {
    auto logits = fempc::models::dgcnn_forward(params, x, fempc::Mode::kEval);
    benchmark::DoNotOptimize(logits);
  }
}
BENCHMARK(BM_DgcnnForward)->Name("dgcnn_forward/k")->DenseRange(5, 30, 5)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
