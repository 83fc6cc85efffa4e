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

#include "fempc/train/gradcheck.hpp"

#include <chrono>

#include "fempc/error.hpp"
#include "fempc/nn/loss.hpp"
#include "fempc/train/trainer.hpp"

namespace fempc::train {

namespace {

Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  Matrix m(rows, cols);
  for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = rng.uniform(-1.0, 1.0);
  return m;
}

// Non-trivial running statistics so eval-mode batch norm is not the identity.
void randomize_running_stats(nn::TensorList tensors, Rng& rng) {
  for (auto& t : tensors) {
    if (t.trainable) continue;
    const bool is_var = t.name.ends_with("running_var");
    for (double& v : t.values) v = is_var ? rng.uniform(0.5, 2.0) : rng.uniform(-0.2, 0.2);
  }
}

// Every trainable tensor, so a sampled subset of coordinates always sees it.
void skew_gradients(const nn::TensorList& grads) {
  for (const auto& t : grads) {
    if (!t.trainable) continue;
    for (double& v : t.values) v = v * 1.5 + 1e-3;
  }
}

template <class Model>
nn::GradCheckResult check_model(const Model& model, const typename Model::Input& input, int label,
                                const GradCheckSetup& setup, Rng& rng) {
  auto params = model.init();
  randomize_running_stats(params.tensors(), rng);
  auto grads = zeros_like(params);
  typename Model::Tape tape;
  const auto logits = model.forward(params, input, setup.mode, &tape);
  const auto loss = nn::softmax_cross_entropy(logits, label);
  model.backward(params, tape, {loss.grad[0], loss.grad[1]}, grads);
  if (setup.corrupt_backward) skew_gradients(grads.tensors());
  auto f = [&] { return nn::softmax_cross_entropy(model.forward(params, input, setup.mode, nullptr), label).loss; };
  nn::GradCheckOptions opts;
  opts.seed = derive_seed(setup.seed, 1);
  return nn::grad_check(f, params.tensors(), grads.tensors(), opts);
}

nn::GradCheckResult check_linear(const GradCheckSetup& setup, Rng& rng) {
  nn::LinearParams lin(5, 2);
  nn::glorot_init(lin, rng);
  for (Eigen::Index i = 0; i < lin.bias.size(); ++i) lin.bias[i] = rng.uniform(-0.5, 0.5);
  const Matrix x = random_matrix(1, 5, rng);
  const int label = static_cast<int>(rng.below(2));
  auto forward = [&] {
    const Matrix y = nn::pointwise_linear(x, lin);
    const models::Logits z{y(0, 0), y(0, 1)};
    return nn::softmax_cross_entropy(z, label);
  };
  nn::LinearParams grad(5, 2);
  const auto loss = forward();
  Matrix dy(1, 2);
  dy << loss.grad[0], loss.grad[1];
  nn::pointwise_linear_backward(x, dy, lin, grad);
  nn::TensorList p, g;
  lin.collect(p, "linear");
  grad.collect(g, "linear");
  if (setup.corrupt_backward) skew_gradients(g);
  nn::GradCheckOptions opts;
  opts.seed = derive_seed(setup.seed, 1);
  return nn::grad_check([&] { return forward().loss; }, p, g, opts);
}

}  // namespace

ModelGradCheck run_model_gradcheck(const GradCheckSetup& setup) {
  const auto start = std::chrono::steady_clock::now();
  Rng rng(setup.seed);
  ModelGradCheck out;
  out.threshold = 1e-4;
  if (setup.model == "linear") {
    out.threshold = 1e-6;
    out.result = check_linear(setup, rng);
  } else if (setup.model == "pointnet") {
    PointNetModel model;
    model.config.init_seed = derive_seed(setup.seed, 2);
    const Matrix x = random_matrix(setup.n_points, model.config.input_dim, rng);
    out.result = check_model(model, x, static_cast<int>(rng.below(2)), setup, rng);
  } else if (setup.model == "dgcnn") {
    DgcnnModel model;
    model.config.k_neighbors = setup.k_neighbors;
    model.config.init_seed = derive_seed(setup.seed, 2);
    if (setup.n_points <= setup.k_neighbors) throw InvalidArgument("gradcheck: need n > k");
    const Matrix x = random_matrix(setup.n_points, model.config.input_dim, rng);
    out.result = check_model(model, x, static_cast<int>(rng.below(2)), setup, rng);
  } else if (setup.model == "cnn") {
    CnnModel model;
    model.config.resolution = setup.resolution;
    model.config.channels = {2, 4, 4};
    model.config.init_seed = derive_seed(setup.seed, 2);
    const Matrix image = random_matrix(setup.resolution, setup.resolution, rng);
    out.result = check_model(model, image, static_cast<int>(rng.below(2)), setup, rng);
  } else {
    throw InvalidArgument("gradcheck: unknown model '" + setup.model + "' (expected linear, pointnet, dgcnn or cnn)");
  }
  out.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return out;
}

}  // namespace fempc::train
