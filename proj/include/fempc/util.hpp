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

#include <cstdint>
#include <filesystem>
#include <map>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fempc {

/// 64-bit finalizer (splitmix64). Used to derive independent seeds.
std::uint64_t mix64(std::uint64_t x);

/// Seed for substream `stream` of `seed`.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// FNV-1a over the bytes, rendered as 16 lowercase hex digits.
std::string digest_hex(std::string_view bytes);

/// Seeded generator with platform-independent derived draws (the engine
/// sequence is fixed by the standard; the distributions here are too).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  std::uint64_t next() { return engine_(); }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (std::size_t i = v.size(); i > 1; --i) {
      std::size_t j = static_cast<std::size_t>(below(i));
      std::swap(v[i - 1], v[j]);
    }
  }

 private:
  std::mt19937_64 engine_;
};

/// 17 significant digits; strtod reproduces the exact double.
std::string format_exact(double v);
/// 6 significant digits, for CSV reports.
std::string format6(double v);

/// Ordered `key = value` pairs; '#' starts a comment line.
using KeyValues = std::map<std::string, std::string>;
KeyValues parse_key_values(std::string_view text);
KeyValues read_key_values(const std::filesystem::path& path);
std::string render_key_values(const KeyValues& kv);

double parse_double(std::string_view key, std::string_view value);
std::int64_t parse_int(std::string_view key, std::string_view value);
std::uint64_t parse_u64(std::string_view key, std::string_view value);
bool parse_bool(std::string_view key, std::string_view value);
std::vector<double> parse_double_list(std::string_view key, std::string_view value);
std::vector<int> parse_int_list(std::string_view key, std::string_view value);
std::string join_ints(std::span<const int> v, char sep = ',');

std::string read_text_file(const std::filesystem::path& path);
/// Writes to a sibling temp file then renames over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);

/// Keeps freed heap memory in the process instead of returning large blocks
/// to the OS; training reallocates the same big buffers every step.
void retain_freed_memory();

}  // namespace fempc
