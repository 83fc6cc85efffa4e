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

#include <filesystem>
#include <string>
#include <vector>

#include "fempc/nn/params.hpp"
#include "fempc/util.hpp"

namespace fempc::nn {

struct StoredTensor {
  std::string name;
  std::vector<int> shape;
  std::vector<double> values;
};

struct Checkpoint {
  std::string model_type;
  KeyValues config;
  std::vector<StoredTensor> tensors;
};

/// Text header (magic, model tag, config pairs, tensor names and shapes)
/// followed by every value as a little-endian IEEE-754 double, in header
/// order.
std::string encode_checkpoint(const std::string& model_type, const KeyValues& config, const TensorList& tensors);
Checkpoint decode_checkpoint(std::string_view bytes);

void write_checkpoint(const std::filesystem::path& path, const std::string& model_type, const KeyValues& config,
                      const TensorList& tensors);
/// Throws IoError("corrupt checkpoint: ...") on any malformed content.
Checkpoint read_checkpoint(const std::filesystem::path& path);

/// Copies stored values into `dst`; names and shapes must match exactly.
void load_tensors(const Checkpoint& ckpt, const TensorList& dst);

}  // namespace fempc::nn
