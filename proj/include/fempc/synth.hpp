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

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "fempc/point_cloud.hpp"
#include "fempc/util.hpp"

namespace fempc::synth {

/// Axis-aligned rectangle inside the unit square; bounds are inclusive.
struct WindowRegion {
  double x0 = 0.7, x1 = 1.0, y0 = 0.4, y1 = 0.6;

  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

struct GeneratorConfig {
  int grid_n = 32;
  int max_mode = 8;
  double k_min = 2.0;
  double k_max = 20.0;
  double damping = 1.0;
  double jitter = 0.005;
  WindowRegion window;
  int n_samples = 72;
  std::uint64_t seed = 42;

  /// Throws InvalidArgument on the first broken invariant.
  void validate() const;

  KeyValues to_key_values() const;
  /// Applies recognised keys; returns the keys it did not recognise.
  std::vector<std::string> apply(const KeyValues& kv);
  std::string digest() const;
};

/// Neumann eigenfunction cos(m pi x) cos(n pi y) of the unit square.
double mode_shape(int m, int n, double x, double y);
/// pi^2 (m^2 + n^2).
double mode_eigenvalue(int m, int n);

/// Superposition of (max_mode+1)^2 cosine modes driven by a point source.
struct ModalField {
  std::array<double, 2> source{0.0, 0.0};
  double wavenumber = 0.0;
  int max_mode = 0;
  /// (max_mode+1) x (max_mode+1), entry (m, n).
  Matrix amplitudes;

  /// Resonant amplitudes phi_mn(source) / sqrt((lambda_mn - k^2)^2 + damping^2).
  static ModalField driven(std::array<double, 2> source, double wavenumber, double damping, int max_mode);
};

/// Pressure p(x, y) = sum_mn A_mn cos(m pi x) cos(n pi y) at each point.
std::vector<double> eval_modal_field(const ModalField& field, std::span<const std::array<double, 2>> points);

struct GeneratedSample {
  PointCloud cloud;  // d = 2, C = 1
  double rms_window = 0.0;
  ModalField field;
};

/// One draw: source point, wavenumber, jittered lattice and pressure.
GeneratedSample generate_sample(const GeneratorConfig& config, Rng& rng);

/// n_samples draws, substream i seeded from (seed, i), labelled by
/// comparing window RMS against the median window RMS.
Dataset generate_dataset(const GeneratorConfig& config);

/// Largest relative error |L_h phi + lambda phi| / lambda of the 5-point
/// Laplacian over interior lattice nodes.
double helmholtz_mode_residual(int m, int n, int grid_n);

}  // namespace fempc::synth
