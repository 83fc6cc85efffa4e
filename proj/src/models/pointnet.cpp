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

#include "fempc/models/pointnet.hpp"

#include "fempc/error.hpp"

namespace fempc::models {

void PointNetConfig::validate() const {
  if (input_dim < 1) throw InvalidArgument("pointnet: input_dim must be positive");
  require_widths(mlp_widths, "pointnet mlp_widths");
  require_widths(head_widths, "pointnet head_widths");
  if (head_widths.back() != 2) throw InvalidArgument("pointnet: last head width must be 2");
}

KeyValues PointNetConfig::to_key_values() const {
  return {{"input_dim", std::to_string(input_dim)},
          {"mlp_widths", join_ints(mlp_widths)},
          {"head_widths", join_ints(head_widths)},
          {"init_seed", std::to_string(init_seed)}};
}

PointNetConfig PointNetConfig::from_key_values(const KeyValues& kv) {
  PointNetConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "input_dim") c.input_dim = static_cast<int>(parse_int(k, v));
    else if (k == "mlp_widths") c.mlp_widths = parse_int_list(k, v);
    else if (k == "head_widths") c.head_widths = parse_int_list(k, v);
    else if (k == "init_seed") c.init_seed = parse_u64(k, v);
    else throw InvalidArgument("pointnet: unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

nn::TensorList PointNetParams::tensors() {
  nn::TensorList out;
  for (std::size_t l = 0; l < mlp.size(); ++l) {
    mlp[l].collect(out, "mlp" + std::to_string(l));
    mlp_bn[l].collect(out, "mlp" + std::to_string(l) + ".bn");
  }
  for (std::size_t l = 0; l < head.size(); ++l) head[l].collect(out, "head" + std::to_string(l));
  return out;
}

std::vector<nn::BatchNormState*> PointNetParams::batch_norms() {
  std::vector<nn::BatchNormState*> out;
  for (auto& b : mlp_bn) out.push_back(&b);
  return out;
}

PointNetParams pointnet_init(const PointNetConfig& config) {
  config.validate();
  Rng rng(config.init_seed);
  PointNetParams p;
  p.mlp = make_linear_chain(config.input_dim, config.mlp_widths, rng);
  for (int w : config.mlp_widths) p.mlp_bn.emplace_back(w);
  p.head = make_linear_chain(config.mlp_widths.back(), config.head_widths, rng);
  return p;
}

std::size_t pointnet_param_count(const PointNetConfig& config) {
  auto p = pointnet_init(config);
  return nn::count_trainable(p.tensors());
}

Logits pointnet_forward(const PointNetParams& params, const Matrix& features, Mode mode, PointNetTape* tape) {
  if (params.mlp.empty() || features.cols() != params.mlp.front().in()) {
    throw InvalidArgument("pointnet: input width " + std::to_string(features.cols()) + " does not match model (" +
                          std::to_string(params.mlp.empty() ? 0 : params.mlp.front().in()) + ")");
  }
  if (features.rows() < 1) throw InvalidArgument("pointnet: empty cloud");
  if (tape) {
    tape->inputs.clear();
    tape->bn.assign(params.mlp.size(), {});
    tape->activations.clear();
  }
  Matrix h = features;
  for (std::size_t l = 0; l < params.mlp.size(); ++l) {
    Matrix z = nn::pointwise_linear(h, params.mlp[l]);
    if (tape) tape->inputs.push_back(std::move(h));
    h = nn::relu(nn::batch_norm(z, params.mlp_bn[l], mode, tape ? &tape->bn[l] : nullptr));
    if (tape) tape->activations.push_back(h);
  }
  auto pooled = nn::global_max_pool(h);
  const Logits out = head_forward(params.head, pooled.values, tape ? &tape->head : nullptr);
  if (tape) tape->pooled = std::move(pooled);
  return out;
}

Logits pointnet_forward(const PointNetParams& params, const PointCloud& cloud, Mode mode, PointNetTape* tape) {
  require_valid(cloud);
  return pointnet_forward(params, cloud.data, mode, tape);
}

Matrix pointnet_backward(const PointNetParams& params, const PointNetTape& tape, const Logits& dlogits,
                         PointNetParams& grads) {
  const RowVector dpool = head_backward(params.head, tape.head, dlogits, grads.head);
  Matrix d = nn::global_max_pool_backward(tape.pooled, dpool, static_cast<int>(tape.activations.back().rows()));
  for (std::size_t l = params.mlp.size(); l-- > 0;) {
    d = nn::relu_backward(tape.activations[l], d);
    d = nn::batch_norm_backward(d, params.mlp_bn[l], tape.bn[l], grads.mlp_bn[l]);
    d = nn::pointwise_linear_backward(tape.inputs[l], d, params.mlp[l], grads.mlp[l]);
  }
  return d;
}

void pointnet_update_stats(PointNetParams& params, const PointNetTape& tape) {
  for (std::size_t l = 0; l < params.mlp_bn.size(); ++l) nn::update_running_stats(params.mlp_bn[l], tape.bn[l]);
}

Label pointnet_predict(const PointNetParams& params, const PointCloud& cloud) {
  return Label{predict_class(pointnet_forward(params, cloud, Mode::kEval))};
}

}  // namespace fempc::models
