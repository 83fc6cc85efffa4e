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

#include "fempc/dataset_io.hpp"

#include <cstdlib>
#include <sstream>

#include "fempc/error.hpp"
#include "fempc/util.hpp"

namespace fempc {

namespace fs = std::filesystem;

std::string serialize_cloud(const PointCloud& cloud) {
  std::string out = std::to_string(cloud.n_points()) + " " + std::to_string(cloud.spatial_dim) + " " +
                    std::to_string(cloud.n_channels) + "\n";
  for (Eigen::Index r = 0; r < cloud.data.rows(); ++r) {
    for (Eigen::Index c = 0; c < cloud.data.cols(); ++c) {
      if (c) out += ' ';
      out += format_exact(cloud.data(r, c));
    }
    out += '\n';
  }
  return out;
}

PointCloud parse_cloud(std::string_view text, const std::string& origin) {
  std::string buf(text);
  const char* p = buf.c_str();
  char* end = nullptr;
  auto next_long = [&](const char* what) {
    const long v = std::strtol(p, &end, 10);
    if (end == p) throw InvalidArgument(origin + ": missing " + std::string(what) + " in header");
    p = end;
    return v;
  };
  const long n = next_long("N");
  const long d = next_long("d");
  const long c = next_long("C");
  if (n < 0 || d < 0 || c < 0) throw InvalidArgument(origin + ": negative header value");
  PointCloud cloud(Matrix(n, d + c), static_cast<int>(d), static_cast<int>(c));
  for (long r = 0; r < n; ++r) {
    for (long j = 0; j < d + c; ++j) {
      const double v = std::strtod(p, &end);
      if (end == p) {
        throw InvalidArgument(origin + ": expected " + std::to_string(d + c) + " values on row " +
                              std::to_string(r));
      }
      cloud.data(r, j) = v;
      p = end;
    }
  }
  while (*p == ' ' || *p == '\n' || *p == '\r' || *p == '\t') ++p;
  if (*p != '\0') throw InvalidArgument(origin + ": trailing data after " + std::to_string(n) + " rows");
  if (auto v = validate_cloud(cloud); !v) throw InvalidArgument(origin + ": " + v.message);
  return cloud;
}

void write_dataset(const Dataset& dataset, const fs::path& dir) {
  if (auto v = validate_dataset(dataset); !v) throw InvalidArgument(v.message);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw IoError("cannot create directory " + dir.string());
  std::string manifest = "sample_id,file,label,n_points,spatial_dim,n_channels\n";
  for (const auto& s : dataset.samples) {
    const std::string file = s.sample_id + ".txt";
    write_file_atomic(dir / file, serialize_cloud(s.cloud));
    manifest += s.sample_id + "," + file + "," + std::to_string(s.label.class_id) + "," +
                std::to_string(s.cloud.n_points()) + "," + std::to_string(s.cloud.spatial_dim) + "," +
                std::to_string(s.cloud.n_channels) + "\n";
  }
  write_file_atomic(dir / "metadata.txt", render_key_values(dataset.metadata));
  write_file_atomic(dir / "manifest.csv", manifest);
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string f;
  while (std::getline(ss, f, ',')) fields.push_back(f);
  if (!line.empty() && line.back() == ',') fields.emplace_back();
  return fields;
}

}  // namespace

Dataset read_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw IoError("dataset directory not found: " + dir.string());
  const fs::path manifest_path = dir / "manifest.csv";
  if (!fs::exists(manifest_path)) throw IoError("missing " + manifest_path.string());
  std::istringstream manifest(read_text_file(manifest_path));
  std::string line;
  std::getline(manifest, line);
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "sample_id,file,label,n_points,spatial_dim,n_channels") {
    throw InvalidArgument(manifest_path.string() + ": unexpected header '" + line + "'");
  }
  Dataset ds;
  int line_no = 1;
  while (std::getline(manifest, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = manifest_path.string() + ":" + std::to_string(line_no);
    if (f.size() != 6) throw InvalidArgument(where + ": expected 6 fields");
    LabeledSample s;
    s.sample_id = f[0];
    s.label = Label::from_int(static_cast<int>(parse_int("label", f[2])));
    const fs::path file = dir / f[1];
    if (!fs::exists(file)) throw IoError(where + ": missing sample file " + file.string());
    s.cloud = parse_cloud(read_text_file(file), file.string());
    if (s.cloud.n_points() != parse_int("n_points", f[3]) || s.cloud.spatial_dim != parse_int("spatial_dim", f[4]) ||
        s.cloud.n_channels != parse_int("n_channels", f[5])) {
      throw InvalidArgument(where + ": manifest dims disagree with " + file.string());
    }
    ds.samples.push_back(std::move(s));
  }
  if (fs::exists(dir / "metadata.txt")) ds.metadata = read_key_values(dir / "metadata.txt");
  if (auto v = validate_dataset(ds); !v) throw InvalidArgument(v.message);
  return ds;
}

}  // namespace fempc
