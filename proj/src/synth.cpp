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

#include "fempc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "fempc/error.hpp"

namespace fempc::synth {

using std::numbers::pi;

void GeneratorConfig::validate() const {
  if (grid_n < 4) throw InvalidArgument("grid_n must be >= 4");
  if (max_mode < 1) throw InvalidArgument("max_mode must be >= 1");
  if (!(k_min < k_max)) throw InvalidArgument("wavenumber range requires k_min < k_max");
  if (!(damping > 0.0)) throw InvalidArgument("damping must be > 0");
  if (!(jitter >= 0.0)) throw InvalidArgument("jitter must be >= 0");
  if (n_samples < 2) throw InvalidArgument("n_samples must be >= 2");
  const auto& w = window;
  if (!(w.x0 < w.x1 && w.y0 < w.y1)) throw InvalidArgument("window region must be nonempty");
  if (w.x0 < 0.0 || w.y0 < 0.0 || w.x1 > 1.0 || w.y1 > 1.0) {
    throw InvalidArgument("window region must lie inside the unit square");
  }
}

KeyValues GeneratorConfig::to_key_values() const {
  return {
      {"grid_n", std::to_string(grid_n)},
      {"max_mode", std::to_string(max_mode)},
      {"k_min", format_exact(k_min)},
      {"k_max", format_exact(k_max)},
      {"damping", format_exact(damping)},
      {"jitter", format_exact(jitter)},
      {"window_x0", format_exact(window.x0)},
      {"window_x1", format_exact(window.x1)},
      {"window_y0", format_exact(window.y0)},
      {"window_y1", format_exact(window.y1)},
      {"n_samples", std::to_string(n_samples)},
      {"seed", std::to_string(seed)},
  };
}

std::vector<std::string> GeneratorConfig::apply(const KeyValues& kv) {
  std::vector<std::string> unknown;
  for (const auto& [k, v] : kv) {
    if (k == "grid_n") grid_n = static_cast<int>(parse_int(k, v));
    else if (k == "max_mode") max_mode = static_cast<int>(parse_int(k, v));
    else if (k == "k_min") k_min = parse_double(k, v);
    else if (k == "k_max") k_max = parse_double(k, v);
    else if (k == "damping") damping = parse_double(k, v);
    else if (k == "jitter") jitter = parse_double(k, v);
    else if (k == "window_x0") window.x0 = parse_double(k, v);
    else if (k == "window_x1") window.x1 = parse_double(k, v);
    else if (k == "window_y0") window.y0 = parse_double(k, v);
    else if (k == "window_y1") window.y1 = parse_double(k, v);
    else if (k == "n_samples") n_samples = static_cast<int>(parse_int(k, v));
    else if (k == "seed") seed = parse_u64(k, v);
    else unknown.push_back(k);
  }
  return unknown;
}

std::string GeneratorConfig::digest() const { return digest_hex(render_key_values(to_key_values())); }

double mode_shape(int m, int n, double x, double y) { return std::cos(m * pi * x) * std::cos(n * pi * y); }

double mode_eigenvalue(int m, int n) { return pi * pi * static_cast<double>(m * m + n * n); }

ModalField ModalField::driven(std::array<double, 2> source, double wavenumber, double damping, int max_mode) {
  ModalField f;
  f.source = source;
  f.wavenumber = wavenumber;
  f.max_mode = max_mode;
  f.amplitudes.resize(max_mode + 1, max_mode + 1);
  const double k2 = wavenumber * wavenumber;
  for (int m = 0; m <= max_mode; ++m) {
    for (int n = 0; n <= max_mode; ++n) {
      const double detune = mode_eigenvalue(m, n) - k2;
      f.amplitudes(m, n) =
          mode_shape(m, n, source[0], source[1]) / std::sqrt(detune * detune + damping * damping);
    }
  }
  return f;
}

std::vector<double> eval_modal_field(const ModalField& field, std::span<const std::array<double, 2>> points) {
  const int modes = field.max_mode + 1;
  if (field.amplitudes.rows() != modes || field.amplitudes.cols() != modes) {
    throw InvalidArgument("amplitude matrix does not match max_mode");
  }
  std::vector<double> out(points.size());
  Vector cx(modes), cy(modes);
  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto [x, y] = points[i];
    if (!(x >= 0.0 && x <= 1.0 && y >= 0.0 && y <= 1.0)) {
      throw InvalidArgument("point " + std::to_string(i) + " lies outside the unit square");
    }
    for (int m = 0; m < modes; ++m) {
      cx[m] = std::cos(m * pi * x);
      cy[m] = std::cos(m * pi * y);
    }
    out[i] = cx.dot(field.amplitudes * cy);
  }
  return out;
}

GeneratedSample generate_sample(const GeneratorConfig& config, Rng& rng) {
  config.validate();
  const double xs = rng.uniform();
  const double ys = rng.uniform();
  const double k = rng.uniform(config.k_min, config.k_max);

  const int g = config.grid_n;
  const double h = 1.0 / (g - 1);
  std::vector<std::array<double, 2>> nodes(static_cast<std::size_t>(g) * g);
  for (int i = 0; i < g; ++i) {
    for (int j = 0; j < g; ++j) {
      double x = i * h;
      double y = j * h;
      if (config.jitter > 0.0) {
        x = std::clamp(x + rng.uniform(-config.jitter, config.jitter), 0.0, 1.0);
        y = std::clamp(y + rng.uniform(-config.jitter, config.jitter), 0.0, 1.0);
      }
      nodes[static_cast<std::size_t>(i) * g + j] = {x, y};
    }
  }

  GeneratedSample out;
  out.field = ModalField::driven({xs, ys}, k, config.damping, config.max_mode);
  const auto pressure = eval_modal_field(out.field, nodes);

  out.cloud = PointCloud(Matrix(nodes.size(), 3), 2, 1);
  double sum_sq = 0.0;
  std::size_t in_window = 0;
  for (std::size_t p = 0; p < nodes.size(); ++p) {
    out.cloud.data(p, 0) = nodes[p][0];
    out.cloud.data(p, 1) = nodes[p][1];
    out.cloud.data(p, 2) = pressure[p];
    if (config.window.contains(nodes[p][0], nodes[p][1])) {
      sum_sq += pressure[p] * pressure[p];
      ++in_window;
    }
  }
  out.rms_window = in_window ? std::sqrt(sum_sq / static_cast<double>(in_window)) : 0.0;
  return out;
}

Dataset generate_dataset(const GeneratorConfig& config) {
  config.validate();
  const int n = config.n_samples;
  std::vector<GeneratedSample> draws(n);

#pragma omp parallel for schedule(dynamic)
  for (int i = 0; i < n; ++i) {
    Rng rng(derive_seed(config.seed, static_cast<std::uint64_t>(i)));
    draws[i] = generate_sample(config, rng);
  }

  std::vector<double> rms(n);
  for (int i = 0; i < n; ++i) rms[i] = draws[i].rms_window;
  std::vector<double> sorted = rms;
  std::sort(sorted.begin(), sorted.end());
  if (sorted.front() == sorted.back()) throw InvalidArgument("non-separable generator configuration");
  const double tau = n % 2 ? sorted[n / 2] : 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);

  Dataset ds;
  const int width = std::max(3, static_cast<int>(std::to_string(n - 1).size()));
  for (int i = 0; i < n; ++i) {
    const std::string digits = std::to_string(i);
    const std::string id = "s" + std::string(static_cast<std::size_t>(width) - digits.size(), '0') + digits;
    ds.samples.push_back({id, std::move(draws[i].cloud), Label{rms[i] > tau ? 1 : 0}});
  }
  for (const auto& [k, v] : config.to_key_values()) ds.metadata["gen." + k] = v;
  ds.metadata["config_digest"] = config.digest();
  ds.metadata["label_threshold"] = format_exact(tau);
  ds.metadata["boundary_model"] = "neumann_cosine_modes";
  ds.metadata["channels"] = "pressure";
  return ds;
}

double helmholtz_mode_residual(int m, int n, int grid_n) {
  if (grid_n < 3) throw InvalidArgument("grid_n must leave interior nodes");
  const double lambda = mode_eigenvalue(m, n);
  if (lambda == 0.0) return 0.0;
  const double h = 1.0 / (grid_n - 1);
  auto phi = [&](int i, int j) { return mode_shape(m, n, i * h, j * h); };
  double worst = 0.0;
  for (int i = 1; i < grid_n - 1; ++i) {
    for (int j = 1; j < grid_n - 1; ++j) {
      const double lap = (phi(i + 1, j) + phi(i - 1, j) + phi(i, j + 1) + phi(i, j - 1) - 4.0 * phi(i, j)) / (h * h);
      worst = std::max(worst, std::abs(lap + lambda * phi(i, j)) / lambda);
    }
  }
  return worst;
}

}  // namespace fempc::synth
