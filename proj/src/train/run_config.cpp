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

#include "fempc/train/run_config.hpp"

#include "fempc/error.hpp"

namespace fempc::train {

RunConfig resolve_run_config(const KeyValues& kv) {
  RunConfig r;
  auto unknown = r.gen.apply(kv);
  KeyValues rest;
  for (const auto& k : unknown) rest[k] = kv.at(k);
  unknown = r.exp.apply(rest);
  if (!unknown.empty()) {
    std::string list;
    for (const auto& k : unknown) list += (list.empty() ? "" : ", ") + k;
    throw InvalidArgument("unknown config key(s): " + list);
  }
  r.gen.validate();

  const std::uint64_t base = r.gen.seed;
  if (!kv.contains("split_seed")) r.exp.training.split_seed = derive_seed(base, 1);
  if (!kv.contains("shuffle_seed")) r.exp.training.shuffle_seed = derive_seed(base, 2);
  if (!kv.contains("pointnet.init_seed")) r.exp.pointnet.init_seed = derive_seed(base, 3);
  if (!kv.contains("dgcnn.init_seed")) r.exp.dgcnn.init_seed = derive_seed(base, 4);
  if (!kv.contains("cnn.init_seed")) r.exp.cnn.init_seed = derive_seed(base, 5);

  r.all = r.gen.to_key_values();
  for (const auto& [k, v] : r.exp.to_key_values()) r.all[k] = v;
  return r;
}

}  // namespace fempc::train
