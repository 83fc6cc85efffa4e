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

#include "fempc/models/dgcnn.hpp"

#include <numeric>

#include "fempc/error.hpp"
#include "fempc/kernels.hpp"

namespace fempc::models {

namespace {
thread_local std::uint64_t g_knn_calls = 0;
}

void DgcnnConfig::validate() const {
  if (k_neighbors < 1) throw InvalidArgument("dgcnn: k_neighbors must be >= 1");
  if (input_dim < 1) throw InvalidArgument("dgcnn: input_dim must be positive");
  require_widths(edge_widths, "dgcnn edge_widths");
  if (embed_width < 1) throw InvalidArgument("dgcnn: embed_width must be positive");
  require_widths(head_widths, "dgcnn head_widths");
  if (head_widths.back() != 2) throw InvalidArgument("dgcnn: last head width must be 2");
}

KeyValues DgcnnConfig::to_key_values() const {
  return {{"k_neighbors", std::to_string(k_neighbors)},
          {"input_dim", std::to_string(input_dim)},
          {"edge_widths", join_ints(edge_widths)},
          {"embed_width", std::to_string(embed_width)},
          {"head_widths", join_ints(head_widths)},
          {"init_seed", std::to_string(init_seed)}};
}

DgcnnConfig DgcnnConfig::from_key_values(const KeyValues& kv) {
  DgcnnConfig c;
  for (const auto& [k, v] : kv) {
    if (k == "k_neighbors") c.k_neighbors = static_cast<int>(parse_int(k, v));
    else if (k == "input_dim") c.input_dim = static_cast<int>(parse_int(k, v));
    else if (k == "edge_widths") c.edge_widths = parse_int_list(k, v);
    else if (k == "embed_width") c.embed_width = static_cast<int>(parse_int(k, v));
    else if (k == "head_widths") c.head_widths = parse_int_list(k, v);
    else if (k == "init_seed") c.init_seed = parse_u64(k, v);
    else throw InvalidArgument("dgcnn: unknown config key '" + k + "'");
  }
  c.validate();
  return c;
}

KnnGraph knn_graph(const Matrix& features, int k) {
  ++g_knn_calls;
  return {static_cast<int>(features.rows()), k, kernels::knn(features, k)};
}

std::uint64_t knn_graph_calls() { return g_knn_calls; }

Matrix edge_features(const Matrix& features, const KnnGraph& graph) {
  if (graph.n != features.rows() || graph.neighbors.size() != static_cast<std::size_t>(graph.n) * graph.k) {
    throw InvalidArgument("edge_features: graph does not match feature rows");
  }
  const Eigen::Index f = features.cols();
  Matrix e(static_cast<Eigen::Index>(graph.n) * graph.k, 2 * f);
  for (int i = 0; i < graph.n; ++i) {
    for (int j = 0; j < graph.k; ++j) {
      const int nb = graph.neighbors[static_cast<std::size_t>(i) * graph.k + j];
      if (nb < 0 || nb >= graph.n) throw InvalidArgument("edge_features: neighbor index out of range");
      const Eigen::Index r = static_cast<Eigen::Index>(i) * graph.k + j;
      e.row(r).head(f) = features.row(i);
      e.row(r).tail(f) = features.row(nb) - features.row(i);
    }
  }
  return e;
}

namespace {

void check_edge_params(const Matrix& x, const nn::LinearParams& lin) {
  if (lin.in() != 2 * x.cols()) {
    throw InvalidArgument("edge_conv: linear input width " + std::to_string(lin.in()) + " != 2 * " +
                          std::to_string(x.cols()));
  }
}

// Number of edges pointing at each point.
Vector in_degree(const KnnGraph& graph) {
  Vector cnt = Vector::Zero(graph.n);
  for (int q : graph.neighbors) cnt[q] += 1.0;
  return cnt;
}

}  // namespace

Matrix edge_conv(const Matrix& x, const nn::LinearParams& lin, const nn::BatchNormState& bn, int k, Mode mode,
                 EdgeConvTape* tape) {
  check_edge_params(x, lin);
  const Eigen::Index n = x.rows(), f = x.cols(), fo = lin.out();
  KnnGraph graph = knn_graph(x, k);
  const int* nbr = graph.neighbors.data();
  // W [x_i; x_j - x_i] = (W1 - W2) x_i + W2 x_j
  const Matrix w_center = lin.weight.leftCols(f) - lin.weight.rightCols(f);
  Matrix a = x * w_center.transpose();
  a.rowwise() += lin.bias.transpose();
  Matrix b = x * lin.weight.rightCols(f).transpose();

  RowVector mean, var, batch_mean, batch_var;
  if (mode != Mode::kEval) {
    const double m = static_cast<double>(n * k);
    const auto cnt = in_degree(graph);
    mean = (static_cast<double>(k) * a.colwise().sum() + (b.array().colwise() * cnt.array()).matrix().colwise().sum()) / m;
    // Per-point partial sums keep the reduction order independent of threads.
    Matrix partial(n, fo);
#pragma omp parallel for schedule(static)
    for (Eigen::Index i = 0; i < n; ++i) {
      auto acc = partial.row(i);
      acc.setZero();
      for (int j = 0; j < k; ++j) acc.array() += (a.row(i) + b.row(nbr[i * k + j]) - mean).array().square();
    }
    var = partial.colwise().sum() / m;
    batch_mean = mean;
    batch_var = var;
  }
  if (mode == Mode::kTrainRunning) {
    // As in nn::batch_norm: record the spread about the running mean.
    batch_var.array() += (batch_mean - bn.running_mean.transpose()).array().square();
  }
  if (mode != Mode::kTrain) {
    mean = bn.running_mean.transpose();
    var = bn.running_var.transpose();
  }
  if (mode == Mode::kEval) {
    batch_mean = mean;
    batch_var = var;
  }
  const RowVector inv_std = (var.array() + bn.eps).rsqrt();
  const RowVector scale = inv_std.array() * bn.gamma.transpose().array();
  const RowVector shift = bn.beta.transpose().array() - mean.array() * scale.array();

  Matrix out(n, fo);
  std::vector<int> argmax(static_cast<std::size_t>(n * fo), 0);
#pragma omp parallel for schedule(static)
  for (Eigen::Index i = 0; i < n; ++i) {
    double* o = out.data() + i * fo;
    int* am = argmax.data() + i * fo;
    const double* ai = a.data() + i * fo;
    for (int j = 0; j < k; ++j) {
      const double* bj = b.data() + static_cast<Eigen::Index>(nbr[i * k + j]) * fo;
      for (Eigen::Index c = 0; c < fo; ++c) {
        const double y = std::max((ai[c] + bj[c]) * scale[c] + shift[c], 0.0);
        if (j == 0 || y > o[c]) {
          o[c] = y;
          am[c] = j;
        }
      }
    }
  }
  if (tape) {
    tape->input = x;
    tape->graph = std::move(graph);
    tape->center = std::move(a);
    tape->neighbor = std::move(b);
    tape->bn = {mode, Matrix(), inv_std, batch_mean, batch_var, mean};
    tape->output = out;
    tape->argmax = std::move(argmax);
  }
  return out;
}

Matrix edge_conv_reference(const Matrix& x, const nn::LinearParams& lin, const nn::BatchNormState& bn, int k,
                           Mode mode) {
  check_edge_params(x, lin);
  const KnnGraph graph{static_cast<int>(x.rows()), k, kernels::serial::knn(x, k)};
  const Matrix act = nn::relu(nn::batch_norm(nn::pointwise_linear(edge_features(x, graph), lin), bn, mode));
  std::vector<int> argmax;
  return kernels::serial::block_max(act, k, argmax);
}

Matrix edge_conv_backward(const Matrix& dout, const nn::LinearParams& lin, const nn::BatchNormState& bn,
                          const EdgeConvTape& tape, nn::LinearParams& dlin, nn::BatchNormState& dbn) {
  const int k = tape.graph.k;
  const Eigen::Index n = dout.rows(), fo = dout.cols(), f = tape.input.cols();
  const int* nbr = tape.graph.neighbors.data();
  const Matrix& a = tape.center;
  const Matrix& b = tape.neighbor;
  const RowVector& mean = tape.bn.norm_mean;
  const RowVector& inv_std = tape.bn.inv_std;
  const RowVector gamma = bn.gamma.transpose();

  // Only the winning edge of each (point, channel) receives gradient, and
  // only where the relu was open.
  Matrix g(n, fo), xhat_win(n, fo);
  Matrix gsum = Matrix::Zero(n, fo);  // g scattered to the winning neighbor
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index c = 0; c < fo; ++c) {
      const int j = tape.argmax[i * fo + c];
      const int q = nbr[i * k + j];
      g(i, c) = tape.output(i, c) > 0.0 ? dout(i, c) : 0.0;
      xhat_win(i, c) = (a(i, c) + b(q, c) - mean[c]) * inv_std[c];
      gsum(q, c) += g(i, c);
    }
  }
  dbn.gamma += (g.array() * xhat_win.array()).colwise().sum().matrix().transpose();
  dbn.beta += g.colwise().sum().transpose();

  Matrix da = g.array().rowwise() * (gamma.array() * inv_std.array());
  Matrix db = gsum.array().rowwise() * (gamma.array() * inv_std.array());
  if (tape.bn.mode == Mode::kTrain) {
    // dE = s (dxhat - mean(dxhat) - xhat mean(dxhat xhat)); summing over a
    // point's edges or a neighbor's in-edges needs only sums of xhat.
    const double m = static_cast<double>(n * k);
    const RowVector m1 = gamma.array() * g.colwise().sum().array() / m;
    const RowVector m2 = gamma.array() * (g.array() * xhat_win.array()).colwise().sum() / m;
    Matrix xsum = Matrix::Zero(n, fo);  // over each point's edges
    Matrix xin = Matrix::Zero(n, fo);   // over each point's in-edges
    for (Eigen::Index i = 0; i < n; ++i) {
      for (int j = 0; j < k; ++j) {
        const int q = nbr[i * k + j];
        const RowVector xh = (a.row(i) + b.row(q) - mean).array() * inv_std.array();
        xsum.row(i) += xh;
        xin.row(q) += xh;
      }
    }
    const auto cnt = in_degree(tape.graph);
    da.array() -= ((static_cast<double>(k) * m1).replicate(n, 1).array() + xsum.array().rowwise() * m2.array())
                      .rowwise() * inv_std.array();
    db.array() -= ((cnt * m1).array() + xin.array().rowwise() * m2.array()).rowwise() * inv_std.array();
  }

  const Matrix dw_center = da.transpose() * tape.input;
  const Matrix dw_neighbor = db.transpose() * tape.input;
  dlin.weight.leftCols(f) += dw_center;
  dlin.weight.rightCols(f) += dw_neighbor - dw_center;
  dlin.bias += da.colwise().sum().transpose();

  const Matrix w_center = lin.weight.leftCols(f) - lin.weight.rightCols(f);
  return da * w_center + db * lin.weight.rightCols(f);
}

nn::TensorList DgcnnParams::tensors() {
  nn::TensorList out;
  for (std::size_t l = 0; l < edge.size(); ++l) {
    edge[l].collect(out, "edge" + std::to_string(l));
    edge_bn[l].collect(out, "edge" + std::to_string(l) + ".bn");
  }
  embed.collect(out, "embed");
  embed_bn.collect(out, "embed.bn");
  for (std::size_t l = 0; l < head.size(); ++l) head[l].collect(out, "head" + std::to_string(l));
  return out;
}

std::vector<nn::BatchNormState*> DgcnnParams::batch_norms() {
  std::vector<nn::BatchNormState*> out;
  for (auto& b : edge_bn) out.push_back(&b);
  out.push_back(&embed_bn);
  return out;
}

DgcnnParams dgcnn_init(const DgcnnConfig& config) {
  config.validate();
  Rng rng(config.init_seed);
  DgcnnParams p;
  p.k_neighbors = config.k_neighbors;
  int in = config.input_dim;
  for (int w : config.edge_widths) {
    p.edge.emplace_back(2 * in, w);
    nn::glorot_init(p.edge.back(), rng);
    p.edge_bn.emplace_back(w);
    in = w;
  }
  const int concat = std::accumulate(config.edge_widths.begin(), config.edge_widths.end(), 0);
  p.embed = nn::LinearParams(concat, config.embed_width);
  nn::glorot_init(p.embed, rng);
  p.embed_bn = nn::BatchNormState(config.embed_width);
  p.head = make_linear_chain(config.embed_width, config.head_widths, rng);
  return p;
}

std::size_t dgcnn_param_count(const DgcnnConfig& config) {
  auto p = dgcnn_init(config);
  return nn::count_trainable(p.tensors());
}

Logits dgcnn_forward(const DgcnnParams& params, const Matrix& features, Mode mode, DgcnnTape* tape) {
  const int k = params.k_neighbors;
  if (features.rows() <= k) {
    throw InvalidArgument("dgcnn: cloud has " + std::to_string(features.rows()) + " points but K = " +
                          std::to_string(k) + "; reduce K below the point count");
  }
  if (params.edge.empty() || features.cols() * 2 != params.edge.front().in()) {
    throw InvalidArgument("dgcnn: input width " + std::to_string(features.cols()) + " does not match model");
  }
  if (tape) tape->edge.assign(params.edge.size(), {});
  std::vector<Matrix> outs;
  outs.reserve(params.edge.size());
  const Matrix* h = &features;
  Eigen::Index total = 0;
  for (std::size_t l = 0; l < params.edge.size(); ++l) {
    outs.push_back(edge_conv(*h, params.edge[l], params.edge_bn[l], k, mode, tape ? &tape->edge[l] : nullptr));
    h = &outs.back();
    total += outs.back().cols();
  }
  Matrix concat(features.rows(), total);
  Eigen::Index col = 0;
  for (const auto& o : outs) {
    concat.middleCols(col, o.cols()) = o;
    col += o.cols();
  }
  nn::BatchNormTape bn_tape;
  Matrix emb = nn::relu(nn::batch_norm(nn::pointwise_linear(concat, params.embed), params.embed_bn, mode,
                                       tape ? &bn_tape : nullptr));
  auto pooled = nn::global_max_pool(emb);
  const Logits logits = head_forward(params.head, pooled.values, tape ? &tape->head : nullptr);
  if (tape) {
    tape->concat = std::move(concat);
    tape->embed_bn = std::move(bn_tape);
    tape->embedded = std::move(emb);
    tape->pooled = std::move(pooled);
  }
  return logits;
}

Logits dgcnn_forward(const DgcnnParams& params, const PointCloud& cloud, Mode mode, DgcnnTape* tape) {
  require_valid(cloud);
  return dgcnn_forward(params, cloud.data, mode, tape);
}

Matrix dgcnn_backward(const DgcnnParams& params, const DgcnnTape& tape, const Logits& dlogits, DgcnnParams& grads) {
  const RowVector dpool = head_backward(params.head, tape.head, dlogits, grads.head);
  const int n = static_cast<int>(tape.embedded.rows());
  Matrix d = nn::global_max_pool_backward(tape.pooled, dpool, n);
  d = nn::relu_backward(tape.embedded, d);
  d = nn::batch_norm_backward(d, params.embed_bn, tape.embed_bn, grads.embed_bn);
  const Matrix dconcat = nn::pointwise_linear_backward(tape.concat, d, params.embed, grads.embed);

  // Offsets of each layer's block inside the concatenation.
  std::vector<Eigen::Index> offset(params.edge.size() + 1, 0);
  for (std::size_t l = 0; l < params.edge.size(); ++l) offset[l + 1] = offset[l] + params.edge[l].out();

  Matrix carry;  // gradient arriving from the next edge layer
  for (std::size_t l = params.edge.size(); l-- > 0;) {
    Matrix dout = dconcat.middleCols(offset[l], params.edge[l].out());
    if (carry.size()) dout += carry;
    carry = edge_conv_backward(dout, params.edge[l], params.edge_bn[l], tape.edge[l], grads.edge[l],
                               grads.edge_bn[l]);
  }
  return carry;
}

void dgcnn_update_stats(DgcnnParams& params, const DgcnnTape& tape) {
  for (std::size_t l = 0; l < params.edge_bn.size(); ++l) nn::update_running_stats(params.edge_bn[l], tape.edge[l].bn);
  nn::update_running_stats(params.embed_bn, tape.embed_bn);
}

Label dgcnn_predict(const DgcnnParams& params, const PointCloud& cloud) {
  return Label{predict_class(dgcnn_forward(params, cloud, Mode::kEval))};
}

}  // namespace fempc::models
