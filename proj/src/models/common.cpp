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

#include "fempc/models/common.hpp"

#include "fempc/error.hpp"

namespace fempc::models {

Logits head_forward(const std::vector<nn::LinearParams>& head, const RowVector& in, HeadTape* tape) {
  RowVector h = in;
  if (tape) {
    tape->inputs.clear();
    tape->outputs.clear();
  }
  for (std::size_t l = 0; l < head.size(); ++l) {
    if (h.size() != head[l].in()) throw InvalidArgument("head input width mismatch");
    if (tape) tape->inputs.push_back(h);
    RowVector z = h * head[l].weight.transpose() + head[l].bias.transpose();
    if (l + 1 < head.size()) {
      z = z.cwiseMax(0.0);
      if (tape) tape->outputs.push_back(z);
    }
    h = std::move(z);
  }
  if (h.size() != 2) throw InvalidArgument("head must end in 2 logits");
  return {h[0], h[1]};
}

RowVector head_backward(const std::vector<nn::LinearParams>& head, const HeadTape& tape, const Logits& dlogits,
                        std::vector<nn::LinearParams>& grads) {
  RowVector d(2);
  d << dlogits[0], dlogits[1];
  for (std::size_t l = head.size(); l-- > 0;) {
    if (l + 1 < head.size()) d = (tape.outputs[l].array() > 0.0).select(d, 0.0);
    grads[l].weight.noalias() += d.transpose() * tape.inputs[l];
    grads[l].bias += d.transpose();
    d = d * head[l].weight;
  }
  return d;
}

std::vector<nn::LinearParams> make_linear_chain(int in, const std::vector<int>& widths, Rng& rng) {
  std::vector<nn::LinearParams> layers;
  for (int w : widths) {
    layers.emplace_back(in, w);
    nn::glorot_init(layers.back(), rng);
    in = w;
  }
  return layers;
}

int predict_class(const Logits& logits) { return logits[1] > logits[0] ? 1 : 0; }

void require_widths(const std::vector<int>& widths, const char* what) {
  if (widths.empty()) throw InvalidArgument(std::string(what) + ": at least one layer required");
  for (int w : widths) {
    if (w < 1) throw InvalidArgument(std::string(what) + ": layer widths must be positive");
  }
}

}  // namespace fempc::models
