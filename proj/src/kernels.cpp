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

#include "fempc/kernels.hpp"

#include <algorithm>
#include <cstring>
#include <utility>

namespace fempc::kernels {

double squared_distance(const double* a, const double* b, int width) {
  double s = 0.0;
  for (int f = 0; f < width; ++f) {
    const double d = a[f] - b[f];
    s += d * d;
  }
  return s;
}

namespace {

// Eight doubles processed elementwise; each lane keeps scalar rounding.
typedef double Lanes __attribute__((vector_size(64)));

void require_k(const Matrix& x, int k) {
  if (k < 1 || k >= x.rows()) {
    throw InvalidArgument("knn requires 1 <= K < N (K=" + std::to_string(k) + ", N=" + std::to_string(x.rows()) + ")");
  }
}

// Bounded insertion into a sorted buffer of (distance, index) pairs.
void knn_row(const Matrix& x, int i, int k, std::vector<std::pair<double, int>>& best, int* out) {
  const int n = static_cast<int>(x.rows());
  const int w = static_cast<int>(x.cols());
  const double* xi = x.data() + static_cast<std::ptrdiff_t>(i) * w;
  best.clear();
  for (int j = 0; j < n; ++j) {
    if (j == i) continue;
    const double d = squared_distance(xi, x.data() + static_cast<std::ptrdiff_t>(j) * w, w);
    if (static_cast<int>(best.size()) == k && !(std::make_pair(d, j) < best.back())) continue;
    auto pos = std::upper_bound(best.begin(), best.end(), std::make_pair(d, j));
    if (static_cast<int>(best.size()) == k) best.pop_back();
    best.insert(pos, {d, j});
  }
  for (int j = 0; j < k; ++j) out[j] = best[j].second;
}

void conv_out_channel(const nn::Tensor& image, const nn::Tensor& kernel, const double* bias, nn::Tensor& out, int o) {
  const int cin = image.dim(0), h = image.dim(1), w = image.dim(2);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double s = bias ? bias[o] : 0.0;
      for (int i = 0; i < cin; ++i) {
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = r + dr;
          if (rr < 0 || rr >= h) continue;
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = c + dc;
            if (cc < 0 || cc >= w) continue;
            s += kernel[((static_cast<std::size_t>(o) * cin + i) * 3 + dr + 1) * 3 + dc + 1] * image.at(i, rr, cc);
          }
        }
      }
      out.at(o, r, c) = s;
    }
  }
}

void conv_input_channel(const nn::Tensor& dy, const nn::Tensor& kernel, nn::Tensor& dx, int i) {
  const int cout = dy.dim(0), h = dy.dim(1), w = dy.dim(2);
  const int cin = kernel.dim(1);
  for (int r = 0; r < h; ++r) {
    for (int c = 0; c < w; ++c) {
      double s = 0.0;
      for (int o = 0; o < cout; ++o) {
        // out(o, r - dr, c - dc) used image(i, r, c) with weight k(o, i, dr, dc)
        for (int dr = -1; dr <= 1; ++dr) {
          const int rr = r - dr;
          if (rr < 0 || rr >= h) continue;
          for (int dc = -1; dc <= 1; ++dc) {
            const int cc = c - dc;
            if (cc < 0 || cc >= w) continue;
            s += kernel[((static_cast<std::size_t>(o) * cin + i) * 3 + dr + 1) * 3 + dc + 1] * dy.at(o, rr, cc);
          }
        }
      }
      dx.at(i, r, c) = s;
    }
  }
}

void conv_kernel_grad_channel(const nn::Tensor& image, const nn::Tensor& dy, nn::Tensor& dk, int o) {
  const int cin = image.dim(0), h = image.dim(1), w = image.dim(2);
  for (int i = 0; i < cin; ++i) {
    for (int dr = -1; dr <= 1; ++dr) {
      for (int dc = -1; dc <= 1; ++dc) {
        double s = 0.0;
        for (int r = std::max(0, -dr); r < std::min(h, h - dr); ++r) {
          for (int c = std::max(0, -dc); c < std::min(w, w - dc); ++c) {
            s += dy.at(o, r, c) * image.at(i, r + dr, c + dc);
          }
        }
        dk[((static_cast<std::size_t>(o) * cin + i) * 3 + dr + 1) * 3 + dc + 1] += s;
      }
    }
  }
}

void check_conv(const nn::Tensor& image, const nn::Tensor& kernel) {
  if (image.rank() != 3 || kernel.rank() != 4 || kernel.dim(1) != image.dim(0) || kernel.dim(2) != 3 ||
      kernel.dim(3) != 3) {
    throw InvalidArgument("conv2d shape mismatch");
  }
}

}  // namespace

std::vector<int> knn(const Matrix& features, int k) {
  require_k(features, k);
  const int n = static_cast<int>(features.rows());
  const int w = static_cast<int>(features.cols());
  // Feature-major copy so distances to many candidates vectorize; each
  // distance still sums its coordinates in order, matching squared_distance.
  constexpr int kTile = 8;   // query rows sharing one sweep over the candidates
  constexpr int kLanes = 8;  // candidates accumulated together in registers
  const int padded = (n + kLanes - 1) / kLanes * kLanes;
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> xt =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>::Zero(w, padded);
  xt.leftCols(n) = features.transpose();
  const int n_tiles = (n + kTile - 1) / kTile;
  std::vector<int> out(static_cast<std::size_t>(n) * k);
#pragma omp parallel
  {
    std::vector<double> dist(static_cast<std::size_t>(kTile) * padded);
    std::vector<std::pair<double, int>> best;
    best.reserve(k + 1);
#pragma omp for schedule(static)
    for (int t = 0; t < n_tiles; ++t) {
      const int i0 = t * kTile;
      const int rows = std::min(kTile, n - i0);
      for (int jb = 0; jb < padded; jb += kLanes) {
        Lanes acc[kTile] = {};
        for (int f = 0; f < w; ++f) {
          Lanes v;
          std::memcpy(&v, xt.data() + static_cast<std::ptrdiff_t>(f) * padded + jb, sizeof v);
          for (int r = 0; r < kTile; ++r) {
            const Lanes e = v - features(std::min(i0 + r, n - 1), f);
            acc[r] += e * e;
          }
        }
        for (int r = 0; r < kTile; ++r) std::memcpy(dist.data() + static_cast<std::size_t>(r) * padded + jb, &acc[r], sizeof acc[r]);
      }
      for (int r = 0; r < rows; ++r) {
        const int i = i0 + r;
        const double* d = dist.data() + static_cast<std::ptrdiff_t>(r) * padded;
        best.clear();
        for (int j = 0; j < n; ++j) {
          if (j == i) continue;
          const std::pair<double, int> key{d[j], j};
          if (static_cast<int>(best.size()) == k && !(key < best.back())) continue;
          auto pos = std::upper_bound(best.begin(), best.end(), key);
          if (static_cast<int>(best.size()) == k) best.pop_back();
          best.insert(pos, key);
        }
        int* row = out.data() + static_cast<std::ptrdiff_t>(i) * k;
        for (int j = 0; j < k; ++j) row[j] = best[j].second;
      }
    }
  }
  return out;
}

nn::Tensor conv2d_forward(const nn::Tensor& image, const nn::Tensor& kernel, const double* bias) {
  check_conv(image, kernel);
  nn::Tensor out({kernel.dim(0), image.dim(1), image.dim(2)});
#pragma omp parallel for schedule(static)
  for (int o = 0; o < kernel.dim(0); ++o) conv_out_channel(image, kernel, bias, out, o);
  return out;
}

nn::Tensor conv2d_input_grad(const nn::Tensor& dy, const nn::Tensor& kernel) {
  nn::Tensor dx({kernel.dim(1), dy.dim(1), dy.dim(2)});
#pragma omp parallel for schedule(static)
  for (int i = 0; i < kernel.dim(1); ++i) conv_input_channel(dy, kernel, dx, i);
  return dx;
}

void conv2d_kernel_grad(const nn::Tensor& image, const nn::Tensor& dy, nn::Tensor& dkernel) {
#pragma omp parallel for schedule(static)
  for (int o = 0; o < dy.dim(0); ++o) conv_kernel_grad_channel(image, dy, dkernel, o);
}

namespace serial {

std::vector<int> knn(const Matrix& features, int k) {
  require_k(features, k);
  const int n = static_cast<int>(features.rows());
  std::vector<int> out(static_cast<std::size_t>(n) * k);
  std::vector<std::pair<double, int>> best;
  for (int i = 0; i < n; ++i) knn_row(features, i, k, best, out.data() + static_cast<std::ptrdiff_t>(i) * k);
  return out;
}

Matrix block_max(const Matrix& x, int k, std::vector<int>& argmax) {
  const Eigen::Index n = x.rows() / k, f = x.cols();
  Matrix out(n, f);
  argmax.assign(static_cast<std::size_t>(n * f), 0);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < f; ++c) {
      int arg = 0;
      for (int j = 1; j < k; ++j) {
        if (x(i * k + j, c) > x(i * k + arg, c)) arg = j;
      }
      out(i, c) = x(i * k + arg, c);
      argmax[i * f + c] = arg;
    }
  }
  return out;
}

nn::Tensor conv2d_forward(const nn::Tensor& image, const nn::Tensor& kernel, const double* bias) {
  check_conv(image, kernel);
  nn::Tensor out({kernel.dim(0), image.dim(1), image.dim(2)});
  for (int o = 0; o < kernel.dim(0); ++o) conv_out_channel(image, kernel, bias, out, o);
  return out;
}

nn::Tensor conv2d_input_grad(const nn::Tensor& dy, const nn::Tensor& kernel) {
  nn::Tensor dx({kernel.dim(1), dy.dim(1), dy.dim(2)});
  for (int i = 0; i < kernel.dim(1); ++i) conv_input_channel(dy, kernel, dx, i);
  return dx;
}

void conv2d_kernel_grad(const nn::Tensor& image, const nn::Tensor& dy, nn::Tensor& dkernel) {
  for (int o = 0; o < dy.dim(0); ++o) conv_kernel_grad_channel(image, dy, dkernel, o);
}

}  // namespace serial

}  // namespace fempc::kernels
