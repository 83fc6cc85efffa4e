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

#include <string>

#include "fempc/synth.hpp"
#include "fempc/train/experiment.hpp"

namespace fempc::train {

/// Generator and experiment settings resolved from one flat key set.
struct RunConfig {
  synth::GeneratorConfig gen;
  ExperimentConfig exp;
  KeyValues all;  // every resolved key, including derived seeds

  std::string digest() const { return digest_hex(render_key_values(all)); }
};

/// Applies generator keys, then experiment keys; anything left over is an
/// InvalidArgument. Split, shuffle and init seeds that are not given
/// explicitly derive from the master `seed`.
RunConfig resolve_run_config(const KeyValues& kv);

}  // namespace fempc::train
