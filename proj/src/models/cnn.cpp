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

#include "fempc/models/cnn.hpp"

#include "fempc/error.hpp"

namespace fempc::models {

void CnnConfig::validate() const {
  require_widths(channels, "cnn channels");
  if (resolution < 4) throw InvalidArgument("cnn: resolution must be >= 4");
  if (resolution % (1 << channels.size()) != 0) {
    throw InvalidArgument("cnn: resolution must be divisible by 2^" + std::to_string(channels.size()));
  }
  if (epochs < 1) throw InvalidArgument("cnn: epochs must be >= 1");
}

KeyValues CnnConfig::to_key_values() const {
  return {{"resolution", std::to_string(resolution)},
          {"channels", join_ints(channels)},
          {"epochs", std::to_string(epochs)},
          {"init_seed", std::to_string(init_seed)}};
}

CnnConfig CnnConfig::from_key_values(const KeyValues& kv) {
  CnnConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "resolution") c.resolution = static_cast<int>(parse_int(k, v));
    else if (k == "channels") c.channels = parse_int_list(k, v);
    else if (k == "epochs") c.epochs = static_cast<int>(parse_int(k, v));
    else if (k == "init_seed") c.init_seed = parse_u64(k, v);
    else throw InvalidArgument("cnn: unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

nn::TensorList CnnParams::tensors() {
  nn::TensorList out;
  for (std::size_t l = 0; l < conv.size(); ++l) {
    conv[l].collect(out, "conv" + std::to_string(l));
    bn[l].collect(out, "conv" + std::to_string(l) + ".bn");
  }
  head.collect(out, "head");
  return out;
}

std::vector<nn::BatchNormState*> CnnParams::batch_norms() {
  std::vector<nn::BatchNormState*> out;
  for (auto& b : bn) out.push_back(&b);
  return out;
}

CnnParams cnn_init(const CnnConfig& config) {
  config.validate();
  Rng rng(config.init_seed);
  CnnParams p;
  int in = 1;
  for (int c : config.channels) {
    p.conv.emplace_back(in, c);
    nn::glorot_init(p.conv.back(), rng);
    p.bn.emplace_back(c);
    in = c;
  }
  const int side = config.final_side();
  p.head = nn::LinearParams(in * side * side, 2);
  nn::glorot_init(p.head, rng);
  return p;
}

Logits cnn_forward(const CnnParams& params, const GrayImage& image, Mode mode, CnnTape* tape) {
  const int r = static_cast<int>(image.rows());
  if (image.cols() != r) throw InvalidArgument("cnn: image must be square");
  const int side = r >> params.conv.size();
  if ((side << params.conv.size()) != r ||
      params.head.in() != params.conv.back().out() * side * side) {
    throw InvalidArgument("cnn: image resolution " + std::to_string(r) + " does not match the model");
  }
  nn::Tensor h({1, r, r}, std::vector<double>(image.data(), image.data() + image.size()));
  if (tape) {
    tape->inputs.clear();
    tape->bn.assign(params.conv.size(), {});
    tape->activated.clear();
    tape->pooled.clear();
  }
  for (std::size_t l = 0; l < params.conv.size(); ++l) {
    const nn::Tensor z = nn::conv2d(h, params.conv[l]);
    const int c = z.dim(0), hh = z.dim(1), ww = z.dim(2);
    const Matrix rows = nn::relu(
        nn::batch_norm(nn::image_to_rows(z), params.bn[l], mode, tape ? &tape->bn[l] : nullptr));
    nn::Tensor act = nn::rows_to_image(rows, c, hh, ww);
    auto pooled = nn::max_pool2d(act);
    if (tape) {
      tape->inputs.push_back(std::move(h));
      tape->activated.push_back(std::move(act));
    }
    h = pooled.values;
    if (tape) tape->pooled.push_back(std::move(pooled));
  }
  const RowVector flat = Eigen::Map<const RowVector>(h.data(), static_cast<Eigen::Index>(h.size()));
  const RowVector z = flat * params.head.weight.transpose() + params.head.bias.transpose();
  if (tape) tape->flat = flat;
  return {z[0], z[1]};
}

void cnn_backward(const CnnParams& params, const CnnTape& tape, const Logits& dlogits, CnnParams& grads) {
  RowVector dz(2);
  dz << dlogits[0], dlogits[1];
  grads.head.weight.noalias() += dz.transpose() * tape.flat;
  grads.head.bias += dz.transpose();
  const RowVector dflat = dz * params.head.weight;
  const auto& last = tape.pooled.back().values;
  nn::Tensor d(last.shape(), std::vector<double>(dflat.data(), dflat.data() + dflat.size()));
  for (std::size_t l = params.conv.size(); l-- > 0;) {
    const auto& act = tape.activated[l];
    d = nn::max_pool2d_backward(tape.pooled[l], d, act.shape());
    const int c = act.dim(0), hh = act.dim(1), ww = act.dim(2);
    Matrix drows = nn::relu_backward(nn::image_to_rows(act), nn::image_to_rows(d));
    drows = nn::batch_norm_backward(drows, params.bn[l], tape.bn[l], grads.bn[l]);
    d = nn::conv2d_backward(tape.inputs[l], nn::rows_to_image(drows, c, hh, ww), params.conv[l], grads.conv[l]);
  }
}

void cnn_update_stats(CnnParams& params, const CnnTape& tape) {
  for (std::size_t l = 0; l < params.bn.size(); ++l) nn::update_running_stats(params.bn[l], tape.bn[l]);
}

Label cnn_predict(const CnnParams& params, const GrayImage& image) {
  return Label{predict_class(cnn_forward(params, image, Mode::kEval))};
}

}  // namespace fempc::models
