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
#include <numeric>

#include "doctest.h"
#include "fempc/error.hpp"
#include "fempc/kernels.hpp"
#include "fempc/models/dgcnn.hpp"
#include "fempc/nn/grad_check.hpp"
#include "helpers.hpp"

using namespace fempc;
using namespace fempc::models;
using fempc::testing::random_matrix;
using fempc::testing::random_permutation;

namespace {

// Full sort of every other row by (squared distance, index).
std::vector<int> knn_oracle(const Matrix& x, int k) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cand;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) d += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      cand.emplace_back(d, j);
    }
    std::sort(cand.begin(), cand.end());
    for (int j = 0; j < k; ++j) out.push_back(cand[j].second);
  }
  return out;
}

Matrix permute_rows(const Matrix& m, const std::vector<int>& p) {
  Matrix out(m.rows(), m.cols());
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.row(i) = m.row(p[i]);
  return out;
}

DgcnnConfig small_config(int k, std::uint64_t seed) {
  DgcnnConfig c;
  c.k_neighbors = k;
  c.edge_widths = {8, 8, 16};
  c.embed_width = 16;
  c.head_widths = {8, 2};
  c.init_seed = seed;
  return c;
}

void randomize_running(DgcnnParams& p, Rng& rng) {
  auto fill = [&](nn::BatchNormState& bn) {
    for (Eigen::Index c = 0; c < bn.running_mean.size(); ++c) {
      bn.running_mean[c] = rng.uniform(-0.2, 0.2);
      bn.running_var[c] = rng.uniform(0.5, 2.0);
    }
  };
  for (auto& bn : p.edge_bn) fill(bn);
  fill(p.embed_bn);
}

}  // namespace

TEST_CASE("knn matches the sort oracle exactly on random clouds") {
  Rng rng(31);
  for (int trial = 0; trial < 100; ++trial) {
    const int n = 2 + static_cast<int>(rng.below(255));
    const int k = 1 + static_cast<int>(rng.below(std::min(32, n - 1)));
    const int f = 1 + static_cast<int>(rng.below(9));
    const Matrix x = random_matrix(n, f, rng);
    REQUIRE(knn_graph(x, k).neighbors == knn_oracle(x, k));
  }
}

TEST_CASE("knn ties among duplicate points resolve by index") {
  Matrix x(6, 2);
  x << 0, 0, 1, 1, 0, 0, 1, 1, 0, 0, 5, 5;
  CHECK(knn_graph(x, 3).neighbors == knn_oracle(x, 3));
  CHECK(knn_graph(x, 3).row(0)[0] == 2);
  CHECK(knn_graph(x, 3).row(0)[1] == 4);
  Matrix same = Matrix::Constant(5, 3, 0.25);
  const auto g = knn_graph(same, 4);
  CHECK(std::vector<int>(g.row(2).begin(), g.row(2).end()) == std::vector<int>{0, 1, 3, 4});
  // Quantized coordinates give many exactly equal distances.
  Rng rng(32);
  for (int trial = 0; trial < 20; ++trial) {
    Matrix q(64, 2);
    for (Eigen::Index i = 0; i < q.size(); ++i) q.data()[i] = static_cast<double>(rng.below(4));
    CHECK(knn_graph(q, 10).neighbors == knn_oracle(q, 10));
  }
}

TEST_CASE("knn collinear example") {
  Matrix x(4, 1);
  x << 0, 1, 3, 7;
  const auto g = knn_graph(x, 2);
  CHECK(std::vector<int>(g.row(2).begin(), g.row(2).end()) == std::vector<int>{1, 0});
  CHECK(std::vector<int>(g.row(3).begin(), g.row(3).end()) == std::vector<int>{2, 1});
}

TEST_CASE("knn requires K < N") {
  Rng rng(33);
  CHECK_THROWS_AS(knn_graph(random_matrix(4, 2, rng), 4), InvalidArgument);
  CHECK_THROWS_AS(knn_graph(random_matrix(4, 2, rng), 0), InvalidArgument);
}

TEST_CASE("edge_features example") {
  Matrix x(3, 2);
  x << 0, 0, 1, 0, 0, 2;
  const auto g = knn_graph(x, 1);
  Matrix want(3, 4);
  want << 0, 0, 1, 0, 1, 0, -1, 0, 0, 2, 0, -2;
  CHECK(edge_features(x, g) == want);
}

TEST_CASE("fused edge_conv agrees with the literal edge-feature computation") {
  Rng rng(34);
  for (Mode mode : {Mode::kTrain, Mode::kEval, Mode::kTrainRunning}) {
    const Matrix x = random_matrix(50, 5, rng);
    nn::LinearParams lin(10, 12);
    nn::glorot_init(lin, rng);
    for (Eigen::Index i = 0; i < 12; ++i) lin.bias[i] = rng.uniform(-0.3, 0.3);
    nn::BatchNormState bn(12);
    for (int c = 0; c < 12; ++c) {
      bn.gamma[c] = rng.uniform(0.5, 1.5);
      bn.beta[c] = rng.uniform(-0.5, 0.5);
      bn.running_mean[c] = rng.uniform(-0.2, 0.2);
      bn.running_var[c] = rng.uniform(0.5, 2.0);
    }
    const Matrix fused = edge_conv(x, lin, bn, 7, mode);
    const Matrix literal = edge_conv_reference(x, lin, bn, 7, mode == Mode::kTrainRunning ? Mode::kEval : mode);
    CHECK((fused - literal).cwiseAbs().maxCoeff() <= 1e-12);
  }
}

TEST_CASE("edge_conv backward matches finite differences") {
  for (Mode mode : {Mode::kTrain, Mode::kEval, Mode::kTrainRunning}) {
    Rng rng(35);
    Matrix x = random_matrix(14, 3, rng);
    nn::LinearParams lin(6, 5);
    nn::glorot_init(lin, rng);
    nn::BatchNormState bn(5);
    for (int c = 0; c < 5; ++c) {
      bn.gamma[c] = rng.uniform(0.5, 1.5);
      bn.beta[c] = rng.uniform(0.0, 0.5);
      bn.running_mean[c] = rng.uniform(-0.2, 0.2);
      bn.running_var[c] = rng.uniform(0.5, 2.0);
    }
    const Matrix r = random_matrix(14, 5, rng);
    EdgeConvTape tape;
    edge_conv(x, lin, bn, 4, mode, &tape);
    nn::LinearParams dlin(6, 5);
    nn::BatchNormState dbn(5);
    dbn.gamma.setZero();
    Matrix dx = edge_conv_backward(r, lin, bn, tape, dlin, dbn);
    auto f = [&] { return (edge_conv(x, lin, bn, 4, mode).array() * r.array()).sum(); };
    nn::TensorList p{nn::ref("x", x), nn::ref("w", lin.weight), nn::ref("gamma", bn.gamma), nn::ref("beta", bn.beta)};
    nn::TensorList g{nn::ref("x", dx), nn::ref("w", dlin.weight), nn::ref("gamma", dbn.gamma), nn::ref("beta", dbn.beta)};
    if (mode == Mode::kTrain) {
      // Batch statistics absorb the bias, so its gradient is exactly zero and
      // a relative check would only measure finite-difference noise.
      CHECK(dlin.bias.cwiseAbs().maxCoeff() <= 1e-12);
    } else {
      p.push_back(nn::ref("b", lin.bias));
      g.push_back(nn::ref("b", dlin.bias));
    }
    const auto res = nn::grad_check(f, p, g);
    CHECK(res.max_rel_error < 1e-6);
  }
}

TEST_CASE("default parameter count") {
  const DgcnnConfig c;
  std::size_t oracle = 0;
  int in = c.input_dim, concat = 0;
  for (int w : c.edge_widths) {
    oracle += static_cast<std::size_t>(2 * in) * w + 3 * w;
    in = w;
    concat += w;
  }
  oracle += static_cast<std::size_t>(concat) * c.embed_width + 3 * c.embed_width;
  in = c.embed_width;
  for (int w : c.head_widths) {
    oracle += static_cast<std::size_t>(in) * w + w;
    in = w;
  }
  CHECK(oracle == 1276034);
  CHECK(dgcnn_param_count(c) == 1276034);
  auto p = dgcnn_init(c);
  CHECK(nn::count_trainable(p.tensors()) == 1276034);
}

TEST_CASE("one knn graph per edge-conv layer, recomputed on current features") {
  Rng rng(36);
  const auto cfg = small_config(5, 1);
  const auto p = dgcnn_init(cfg);
  const Matrix x = random_matrix(40, 3, rng);
  DgcnnTape tape;
  const auto before = knn_graph_calls();
  dgcnn_forward(p, x, Mode::kTrain, &tape);
  CHECK(knn_graph_calls() - before == cfg.edge_widths.size());
  CHECK(tape.edge[0].graph == knn_graph(x, 5));
  for (std::size_t l = 1; l < tape.edge.size(); ++l) {
    CHECK(tape.edge[l].graph == knn_graph(tape.edge[l - 1].output, 5));
  }
  CHECK(tape.edge[0].graph != tape.edge[1].graph);
}

TEST_CASE("eval logits are permutation invariant") {
  Rng rng(37);
  auto p = dgcnn_init(small_config(6, 2));
  randomize_running(p, rng);
  for (int trial = 0; trial < 10; ++trial) {
    const Matrix x = random_matrix(30, 3, rng);
    const auto base = dgcnn_forward(p, x, Mode::kEval);
    const auto perm = dgcnn_forward(p, permute_rows(x, random_permutation(30, rng)), Mode::kEval);
    CHECK(std::abs(base[0] - perm[0]) <= 1e-9);
    CHECK(std::abs(base[1] - perm[1]) <= 1e-9);
  }
}

TEST_CASE("all-zero weights give zero logits") {
  auto p = dgcnn_init(small_config(3, 3));
  nn::zero_all(p.tensors());
  Rng rng(38);
  const auto z = dgcnn_forward(p, random_matrix(10, 3, rng), Mode::kEval);
  CHECK(z[0] == 0.0);
  CHECK(z[1] == 0.0);
}

TEST_CASE("prediction is the argmax of eval logits") {
  Rng rng(39);
  auto p = dgcnn_init(small_config(4, 4));
  randomize_running(p, rng);
  for (int i = 0; i < 50; ++i) {
    const PointCloud c{random_matrix(12, 3, rng), 2, 1};
    CHECK(dgcnn_predict(p, c).class_id == predict_class(dgcnn_forward(p, c.data, Mode::kEval)));
  }
}

TEST_CASE("too few points for K is an error naming K") {
  const auto p = dgcnn_init(small_config(10, 5));
  Rng rng(40);
  CHECK_THROWS_WITH_AS(dgcnn_forward(p, random_matrix(10, 3, rng), Mode::kEval), doctest::Contains("K"),
                       InvalidArgument);
}
