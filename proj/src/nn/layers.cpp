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

#include "fempc/nn/layers.hpp"

#include <cmath>

#include "fempc/kernels.hpp"

namespace fempc::nn {

void LinearParams::collect(TensorList& out, const std::string& prefix) {
  out.push_back(ref(prefix + ".weight", weight));
  out.push_back(ref(prefix + ".bias", bias));
}

double glorot_bound(int fan_in, int fan_out) { return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out)); }

void glorot_init(LinearParams& p, Rng& rng) {
  const double b = glorot_bound(p.in(), p.out());
  for (Eigen::Index i = 0; i < p.weight.size(); ++i) p.weight.data()[i] = rng.uniform(-b, b);
  p.bias.setZero();
}

Matrix pointwise_linear(const Matrix& x, const LinearParams& p) {
  if (x.cols() != p.in()) {
    throw InvalidArgument("pointwise_linear: input width " + std::to_string(x.cols()) + " != " +
                          std::to_string(p.in()));
  }
  Matrix y = x * p.weight.transpose();
  y.rowwise() += p.bias.transpose();
  return y;
}

Matrix pointwise_linear_backward(const Matrix& x, const Matrix& dy, const LinearParams& p, LinearParams& grad) {
  grad.weight.noalias() += dy.transpose() * x;
  grad.bias += dy.colwise().sum().transpose();
  return dy * p.weight;
}

void BatchNormState::collect(TensorList& out, const std::string& prefix) {
  out.push_back(ref(prefix + ".gamma", gamma));
  out.push_back(ref(prefix + ".beta", beta));
  out.push_back(ref(prefix + ".running_mean", running_mean, false));
  out.push_back(ref(prefix + ".running_var", running_var, false));
}

Matrix batch_norm(const Matrix& x, const BatchNormState& s, Mode mode, BatchNormTape* tape) {
  if (x.cols() != s.channels()) throw InvalidArgument("batch_norm: channel count mismatch");
  if (x.rows() < 1) throw InvalidArgument("batch_norm: needs at least one row");
  RowVector batch_mean, batch_var;
  if (mode != Mode::kEval) {
    batch_mean = x.colwise().mean();
    batch_var = (x.rowwise() - batch_mean).array().square().colwise().mean();
  }
  if (mode == Mode::kTrainRunning) {
    // Spread about the running mean, so the running variance covers the
    // differences between clouds and not only those within one.
    batch_var.array() += (batch_mean - s.running_mean.transpose()).array().square();
  }
  const bool own = mode == Mode::kTrain;
  const RowVector mean = own ? batch_mean : RowVector(s.running_mean.transpose());
  const RowVector var = own ? batch_var : RowVector(s.running_var.transpose());
  const RowVector inv_std = (var.array() + s.eps).rsqrt();
  Matrix xhat = (x.rowwise() - mean).array().rowwise() * inv_std.array();
  Matrix y = (xhat.array().rowwise() * s.gamma.transpose().array()).rowwise() + s.beta.transpose().array();
  if (tape) {
    tape->mode = mode;
    tape->inv_std = inv_std;
    tape->batch_mean = mode == Mode::kEval ? mean : batch_mean;
    tape->batch_var = mode == Mode::kEval ? var : batch_var;
    tape->norm_mean = mean;
    tape->xhat = std::move(xhat);
  }
  return y;
}

Matrix batch_norm_backward(const Matrix& dy, const BatchNormState& s, const BatchNormTape& tape, BatchNormState& grad) {
  grad.gamma += (dy.array() * tape.xhat.array()).colwise().sum().matrix().transpose();
  grad.beta += dy.colwise().sum().transpose();
  const Matrix dxhat = dy.array().rowwise() * s.gamma.transpose().array();
  if (tape.mode != Mode::kTrain) return dxhat.array().rowwise() * tape.inv_std.array();
  const double n = static_cast<double>(dy.rows());
  const RowVector sum_dxhat = dxhat.colwise().sum();
  const RowVector sum_dxhat_xhat = (dxhat.array() * tape.xhat.array()).colwise().sum();
  Matrix dx = (dxhat.rowwise() - sum_dxhat / n).array() -
              tape.xhat.array().rowwise() * (sum_dxhat_xhat / n).array();
  dx.array().rowwise() *= tape.inv_std.array();
  return dx;
}

void update_running_stats(BatchNormState& s, const BatchNormTape& tape) {
  if (tape.mode == Mode::kEval) return;
  s.running_mean = s.momentum * s.running_mean + (1.0 - s.momentum) * tape.batch_mean.transpose();
  s.running_var = s.momentum * s.running_var + (1.0 - s.momentum) * tape.batch_var.transpose();
}

Matrix relu(const Matrix& x) { return x.cwiseMax(0.0); }

Matrix relu_backward(const Matrix& y, const Matrix& dy) { return (y.array() > 0.0).select(dy, 0.0); }

MaxPoolResult global_max_pool(const Matrix& x) {
  if (x.rows() < 1) throw InvalidArgument("global_max_pool: empty input");
  MaxPoolResult r;
  r.values.resize(x.cols());
  r.argmax.assign(x.cols(), 0);
  r.values = x.row(0);
  for (Eigen::Index i = 1; i < x.rows(); ++i) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      if (x(i, c) > r.values[c]) {
        r.values[c] = x(i, c);
        r.argmax[c] = static_cast<int>(i);
      }
    }
  }
  return r;
}

Matrix global_max_pool_backward(const MaxPoolResult& pooled, const RowVector& dy, int rows) {
  Matrix dx = Matrix::Zero(rows, dy.size());
  for (Eigen::Index c = 0; c < dy.size(); ++c) dx(pooled.argmax[c], c) = dy[c];
  return dx;
}

void Conv2dParams::collect(TensorList& out, const std::string& prefix) {
  out.push_back({prefix + ".kernel", kernel.shape(), kernel.values(), true});
  out.push_back(ref(prefix + ".bias", bias));
}

void glorot_init(Conv2dParams& p, Rng& rng) {
  const double b = glorot_bound(9 * p.in(), 9 * p.out());
  for (auto& v : p.kernel.values()) v = rng.uniform(-b, b);
  p.bias.setZero();
}

Tensor conv2d(const Tensor& image, const Conv2dParams& p) {
  if (image.rank() != 3 || image.dim(0) != p.in()) throw InvalidArgument("conv2d: input channel mismatch");
  if (image.dim(1) < 1 || image.dim(2) < 1) throw InvalidArgument("conv2d: empty image");
  return kernels::conv2d_forward(image, p.kernel, p.bias.data());
}

Tensor conv2d_backward(const Tensor& image, const Tensor& dy, const Conv2dParams& p, Conv2dParams& grad) {
  kernels::conv2d_kernel_grad(image, dy, grad.kernel);
  const int hw = dy.dim(1) * dy.dim(2);
  for (int o = 0; o < dy.dim(0); ++o) {
    double s = 0.0;
    for (int i = 0; i < hw; ++i) s += dy[static_cast<std::size_t>(o) * hw + i];
    grad.bias[o] += s;
  }
  return kernels::conv2d_input_grad(dy, p.kernel);
}

MaxPool2dResult max_pool2d(const Tensor& image) {
  if (image.rank() != 3) throw InvalidArgument("max_pool2d: expected C x R x R");
  const int c = image.dim(0), h = image.dim(1), w = image.dim(2);
  if (h % 2 || w % 2) throw InvalidArgument("max_pool2d: odd spatial size " + std::to_string(h));
  MaxPool2dResult r{Tensor({c, h / 2, w / 2}), {}};
  r.argmax.resize(r.values.size());
  std::size_t o = 0;
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < h / 2; ++i) {
      for (int j = 0; j < w / 2; ++j, ++o) {
        int best_r = 2 * i, best_c = 2 * j;
        for (int di = 0; di < 2; ++di) {
          for (int dj = 0; dj < 2; ++dj) {
            if (image.at(ch, 2 * i + di, 2 * j + dj) > image.at(ch, best_r, best_c)) {
              best_r = 2 * i + di;
              best_c = 2 * j + dj;
            }
          }
        }
        r.values[o] = image.at(ch, best_r, best_c);
        r.argmax[o] = (ch * h + best_r) * w + best_c;
      }
    }
  }
  return r;
}

Tensor max_pool2d_backward(const MaxPool2dResult& pooled, const Tensor& dy, const std::vector<int>& input_shape) {
  Tensor dx(input_shape);
  for (std::size_t o = 0; o < dy.size(); ++o) dx[pooled.argmax[o]] += dy[o];
  return dx;
}

Matrix image_to_rows(const Tensor& image) {
  const int c = image.dim(0), hw = image.dim(1) * image.dim(2);
  Matrix m(hw, c);
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < hw; ++i) m(i, ch) = image[static_cast<std::size_t>(ch) * hw + i];
  }
  return m;
}

Tensor rows_to_image(const Matrix& rows, int c, int h, int w) {
  Tensor t({c, h, w});
  const int hw = h * w;
  for (int ch = 0; ch < c; ++ch) {
    for (int i = 0; i < hw; ++i) t[static_cast<std::size_t>(ch) * hw + i] = rows(i, ch);
  }
  return t;
}

}  // namespace fempc::nn
