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

#include "fempc/point_cloud.hpp"

namespace fempc {

/// Per-sample text format: first line "N d C", then N rows of d+C values
/// with 17 significant digits.
std::string serialize_cloud(const PointCloud& cloud);
PointCloud parse_cloud(std::string_view text, const std::string& origin = "<memory>");

/// Writes manifest.csv, metadata.txt and one <sample_id>.txt per sample.
void write_dataset(const Dataset& dataset, const std::filesystem::path& dir);

/// Reads a dataset directory. Throws IoError for missing files and
/// InvalidArgument for content that breaks the format or the invariants.
Dataset read_dataset(const std::filesystem::path& dir);

}  // namespace fempc
