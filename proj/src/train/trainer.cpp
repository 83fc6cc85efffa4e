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

#include "fempc/train/trainer.hpp"

namespace fempc::train {

void TrainingConfig::validate() const {
  if (epochs < 0) throw InvalidArgument("epochs must be >= 0");
  if (batch_size < 1) throw InvalidArgument("batch_size must be >= 1");
  if (!(split_train_fraction > 0.0 && split_train_fraction < 1.0)) {
    throw InvalidArgument("split_train_fraction must lie in (0, 1)");
  }
  // A zero learning rate is accepted here as a null update.
  if (!(optimizer.learning_rate >= 0.0)) throw InvalidArgument("learning_rate must be >= 0");
  if (!(optimizer.momentum >= 0.0 && optimizer.momentum < 1.0)) throw InvalidArgument("momentum must lie in [0, 1)");
  if (!(bn_momentum >= 0.0 && bn_momentum < 1.0)) throw InvalidArgument("batch_norm_momentum must lie in [0, 1)");
}

KeyValues TrainingConfig::to_key_values() const {
  return {{"epochs", std::to_string(epochs)},
          {"batch_size", std::to_string(batch_size)},
          {"learning_rate", format_exact(optimizer.learning_rate)},
          {"momentum", format_exact(optimizer.momentum)},
          {"split_train_fraction", format_exact(split_train_fraction)},
          {"split_seed", std::to_string(split_seed)},
          {"shuffle_seed", std::to_string(shuffle_seed)},
          {"shuffle_each_epoch", shuffle_each_epoch ? "true" : "false"},
          {"batch_norm_momentum", format_exact(bn_momentum)},
          {"batch_norm_stats", train_mode == Mode::kTrain ? "cloud" : "running"}};
}

void Confusion::add(int predicted, int actual) {
  if (actual == 1) {
    (predicted == 1 ? tp : fn)++;
  } else {
    (predicted == 1 ? fp : tn)++;
  }
}

Confusion confusion_of(std::span<const int> predicted, std::span<const int> actual) {
  if (predicted.size() != actual.size()) throw InvalidArgument("confusion_of: length mismatch");
  Confusion c;
  for (std::size_t i = 0; i < predicted.size(); ++i) c.add(predicted[i], actual[i]);
  return c;
}

std::string metrics_csv(const Metrics& m) {
  std::string out = "epoch,mean_loss\n";
  for (std::size_t e = 0; e < m.epoch_loss.size(); ++e) {
    out += std::to_string(e + 1) + "," + format6(m.epoch_loss[e]) + "\n";
  }
  out += "test_accuracy," + format6(m.test_accuracy) + "\n";
  return out;
}

}  // namespace fempc::train
