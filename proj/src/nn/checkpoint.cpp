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

#include "fempc/nn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <sstream>

#include "fempc/error.hpp"

namespace fempc::nn {

namespace {

constexpr std::string_view kMagic = "fempc-checkpoint 1";

void put_le(std::string& out, double v) {
  auto bits = std::bit_cast<std::uint64_t>(v);
  for (int b = 0; b < 8; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xff));
}

double get_le(const unsigned char* p) {
  std::uint64_t bits = 0;
  for (int b = 0; b < 8; ++b) bits |= static_cast<std::uint64_t>(p[b]) << (8 * b);
  return std::bit_cast<double>(bits);
}

[[noreturn]] void corrupt(const std::string& why) { throw IoError("corrupt checkpoint: " + why); }

}  // namespace

std::string encode_checkpoint(const std::string& model_type, const KeyValues& config, const TensorList& tensors) {
  std::string out(kMagic);
  out += "\nmodel " + model_type + "\nconfig " + std::to_string(config.size()) + "\n";
  for (const auto& [k, v] : config) {
    if (k.find_first_of(" \n") != std::string::npos || v.find('\n') != std::string::npos || v.empty()) {
      throw InvalidArgument("checkpoint config entry '" + k + "' cannot be encoded");
    }
    out += k + " " + v + "\n";
  }
  std::size_t total = 0;
  out += "tensors " + std::to_string(tensors.size()) + "\n";
  for (const auto& t : tensors) {
    out += t.name + " " + std::to_string(t.shape.size());
    for (int d : t.shape) out += " " + std::to_string(d);
    out += "\n";
    total += t.values.size();
  }
  out += "data " + std::to_string(total) + "\n";
  out.reserve(out.size() + 8 * total);
  for (const auto& t : tensors) {
    for (double v : t.values) put_le(out, v);
  }
  return out;
}

Checkpoint decode_checkpoint(std::string_view bytes) {
  std::size_t pos = 0;
  auto line = [&]() -> std::string {
    const auto nl = bytes.find('\n', pos);
    if (nl == std::string_view::npos) corrupt("truncated header");
    std::string l(bytes.substr(pos, nl - pos));
    pos = nl + 1;
    return l;
  };
  auto count_after = [&](const std::string& l, const std::string& key) -> std::size_t {
    if (l.rfind(key + " ", 0) != 0) corrupt("expected '" + key + "'");
    try {
      return static_cast<std::size_t>(std::stoull(l.substr(key.size() + 1)));
    } catch (const std::exception&) {
      corrupt("bad count for '" + key + "'");
    }
  };

  if (line() != kMagic) corrupt("bad magic");
  Checkpoint ck;
  const std::string model = line();
  if (model.rfind("model ", 0) != 0) corrupt("missing model tag");
  ck.model_type = model.substr(6);
  const std::size_t n_config = count_after(line(), "config");
  for (std::size_t i = 0; i < n_config; ++i) {
    const std::string l = line();
    const auto sp = l.find(' ');
    if (sp == std::string::npos) corrupt("bad config line");
    ck.config[l.substr(0, sp)] = l.substr(sp + 1);
  }
  const std::size_t n_tensors = count_after(line(), "tensors");
  std::size_t total = 0;
  for (std::size_t i = 0; i < n_tensors; ++i) {
    std::istringstream ss(line());
    StoredTensor t;
    std::size_t rank = 0;
    if (!(ss >> t.name >> rank)) corrupt("bad tensor line");
    std::size_t count = 1;
    for (std::size_t r = 0; r < rank; ++r) {
      int d = -1;
      if (!(ss >> d) || d < 0) corrupt("bad shape for " + t.name);
      t.shape.push_back(d);
      count *= static_cast<std::size_t>(d);
    }
    t.values.resize(count);
    total += count;
    ck.tensors.push_back(std::move(t));
  }
  if (count_after(line(), "data") != total) corrupt("data count disagrees with shapes");
  if (bytes.size() - pos != 8 * total) {
    corrupt("expected " + std::to_string(8 * total) + " data bytes, found " + std::to_string(bytes.size() - pos));
  }
  const auto* p = reinterpret_cast<const unsigned char*>(bytes.data() + pos);
  for (auto& t : ck.tensors) {
    for (double& v : t.values) {
      v = get_le(p);
      p += 8;
    }
  }
  return ck;
}

void write_checkpoint(const std::filesystem::path& path, const std::string& model_type, const KeyValues& config,
                      const TensorList& tensors) {
  write_file_atomic(path, encode_checkpoint(model_type, config, tensors));
}

Checkpoint read_checkpoint(const std::filesystem::path& path) { return decode_checkpoint(read_text_file(path)); }

void load_tensors(const Checkpoint& ckpt, const TensorList& dst) {
  if (ckpt.tensors.size() != dst.size()) {
    throw InvalidArgument("checkpoint holds " + std::to_string(ckpt.tensors.size()) + " tensors, model expects " +
                          std::to_string(dst.size()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    const auto& s = ckpt.tensors[i];
    if (s.name != dst[i].name || s.shape != dst[i].shape) {
      throw InvalidArgument("checkpoint tensor '" + s.name + "' does not match model tensor '" + dst[i].name + "'");
    }
    std::copy(s.values.begin(), s.values.end(), dst[i].values.begin());
  }
}

}  // namespace fempc::nn
