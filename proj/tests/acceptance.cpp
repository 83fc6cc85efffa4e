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

// Acceptance suite: one PASS/FAIL line per criterion. Pass criterion numbers
// as arguments to run a subset; exit status is the number of failures.

#include <sys/wait.h>

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

#include "fempc/dataset_io.hpp"
#include "fempc/models/dgcnn.hpp"
#include "fempc/models/pointnet.hpp"
#include "fempc/models/projection.hpp"
#include "fempc/nn/checkpoint.hpp"
#include "fempc/nn/loss.hpp"
#include "fempc/train/gradcheck.hpp"
#include "fempc/train/run_config.hpp"
#include "helpers.hpp"

namespace fs = std::filesystem;
using namespace fempc;
using fempc::testing::random_matrix;
using fempc::testing::random_permutation;
using fempc::testing::TempDir;

namespace {

// Seeds for the statistical criteria, fixed before any result was seen.
constexpr std::uint64_t kSeeds[] = {42, 43, 44};

struct Outcome {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

bool same_bits(double a, double b) { return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b); }

void randomize_running(nn::TensorList tensors, Rng& rng) {
  for (auto& t : tensors) {
    if (t.trainable) continue;
    const bool var = t.name.ends_with("running_var");
    for (double& v : t.values) v = var ? rng.uniform(0.5, 2.0) : rng.uniform(-0.2, 0.2);
  }
}

train::RunConfig default_run(std::uint64_t seed) { return train::resolve_run_config({{"seed", std::to_string(seed)}}); }

// 1. Gradient correctness.
Outcome gradients() {
  Outcome o{true, ""};
  for (const char* model : {"linear", "pointnet", "dgcnn", "cnn"}) {
    train::GradCheckSetup s;
    s.model = model;
    const auto r = train::run_model_gradcheck(s);
    const bool ok = r.passed() && r.seconds < 60.0;
    o.pass &= ok;
    o.detail += fmt("%s%s %.1e<%.0e %.1fs", o.detail.empty() ? "" : ", ", model, r.result.max_rel_error, r.threshold,
                    r.seconds);
  }
  return o;
}

// 2. Permutation invariance of eval logits.
Outcome permutation() {
  Rng rng(2);
  models::PointNetConfig pc;
  pc.init_seed = 11;
  auto pn = models::pointnet_init(pc);
  randomize_running(pn.tensors(), rng);
  models::DgcnnConfig dc;
  dc.init_seed = 12;
  auto dg = models::dgcnn_init(dc);
  randomize_running(dg.tensors(), rng);
  double worst_pn = 0.0, worst_dg = 0.0;
  double spread_lo = 1e300, spread_hi = -1e300;  // shows the logits are not constant
  for (int c = 0; c < 50; ++c) {
    const Matrix x = random_matrix(64, 3, rng);
    const auto pn0 = models::pointnet_forward(pn, x, Mode::kEval);
    const auto dg0 = models::dgcnn_forward(dg, x, Mode::kEval);
    spread_lo = std::min(spread_lo, dg0[0] - dg0[1]);
    spread_hi = std::max(spread_hi, dg0[0] - dg0[1]);
    for (int p = 0; p < 10; ++p) {
      const auto perm = random_permutation(64, rng);
      Matrix xp(64, 3);
      for (int i = 0; i < 64; ++i) xp.row(i) = x.row(perm[i]);
      const auto a = models::pointnet_forward(pn, xp, Mode::kEval);
      const auto b = models::dgcnn_forward(dg, xp, Mode::kEval);
      for (int k = 0; k < 2; ++k) {
        worst_pn = std::max(worst_pn, std::abs(a[k] - pn0[k]));
        worst_dg = std::max(worst_dg, std::abs(b[k] - dg0[k]));
      }
    }
  }
  return {worst_pn <= 1e-9 && worst_dg <= 1e-9,
          fmt("500 permutations, max |dlogit| pointnet %.1e, dgcnn %.1e (tol 1e-9); dgcnn margin ranges over [%.3g, %.3g]",
              worst_pn, worst_dg, spread_lo, spread_hi)};
}

std::vector<int> knn_oracle(const Matrix& x, int k) {
  const int n = static_cast<int>(x.rows());
  std::vector<int> out;
  for (int i = 0; i < n; ++i) {
    std::vector<std::pair<double, int>> cand;
    for (int j = 0; j < n; ++j) {
      if (j == i) continue;
      double d = 0.0;
      for (Eigen::Index c = 0; c < x.cols(); ++c) d += (x(i, c) - x(j, c)) * (x(i, c) - x(j, c));
      cand.emplace_back(d, j);
    }
    std::sort(cand.begin(), cand.end());
    for (int j = 0; j < k; ++j) out.push_back(cand[j].second);
  }
  return out;
}

// 3. KNN against the exhaustive sort oracle.
Outcome knn() {
  Rng rng(3);
  int mismatches = 0, clouds = 0;
  for (int t = 0; t < 100; ++t, ++clouds) {
    const int n = 2 + static_cast<int>(rng.below(255));
    const int k = 1 + static_cast<int>(rng.below(std::min(32, n - 1)));
    const Matrix x = random_matrix(n, 1 + static_cast<int>(rng.below(8)), rng);
    mismatches += models::knn_graph(x, k).neighbors != knn_oracle(x, k);
  }
  // Duplicated and lattice points: many exactly tied distances.
  for (int t = 0; t < 20; ++t, ++clouds) {
    Matrix x(100, 3);
    for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = static_cast<double>(rng.below(3));
    const int k = 1 + static_cast<int>(rng.below(32));
    mismatches += models::knn_graph(x, k).neighbors != knn_oracle(x, k);
  }
  return {mismatches == 0, fmt("%d clouds (20 with duplicate points), %d mismatches", clouds, mismatches)};
}

models::GrayImage image_oracle(const PointCloud& c, const models::ProjectionSpec& s) {
  std::map<std::pair<int, int>, std::vector<double>> cells;
  for (int i = 0; i < c.n_points(); ++i) {
    int rc[2];
    for (int a = 0; a < 2; ++a) {
      const double t = (c.data(i, s.plane[a]) - s.bounds[a].lo) / (s.bounds[a].hi - s.bounds[a].lo);
      rc[a] = std::min(s.resolution - 1, static_cast<int>(std::floor(t * s.resolution)));
    }
    cells[{rc[0], rc[1]}].push_back(c.data(i, c.spatial_dim + s.field_channel));
  }
  models::GrayImage img = models::GrayImage::Zero(s.resolution, s.resolution);
  for (auto& [rc, v] : cells) {
    std::sort(v.begin(), v.end());
    double sum = 0.0;
    for (double x : v) sum += x;
    img(rc.first, rc.second) = sum;
  }
  return img;
}

// 4. Algorithm 1 projection.
Outcome projection() {
  Rng rng(4);
  int oracle_bad = 0, order_bad = 0;
  double worst_sum = 0.0;
  for (int t = 0; t < 100; ++t) {
    const int n = 1 + static_cast<int>(rng.below(500));
    const auto c = fempc::testing::random_cloud(n, 3, 1, rng);
    models::ProjectionSpec s;
    s.plane = {static_cast<int>(t % 2), 2};
    s.resolution = 4 + static_cast<int>(rng.below(61));
    s.bounds = {models::AxisBounds{-1.0, 1.0}, models::AxisBounds{-1.0, 1.0}};
    const auto img = models::pointcloud_to_image(c, s);
    oracle_bad += img != image_oracle(c, s);
    const double total = c.data.col(3).sum(), mag = std::max(1e-300, c.data.col(3).cwiseAbs().sum());
    worst_sum = std::max(worst_sum, std::abs(img.sum() - total) / mag);
    PointCloud shuffled = c;
    const auto perm = random_permutation(n, rng);
    for (int i = 0; i < n; ++i) shuffled.data.row(i) = c.data.row(perm[i]);
    order_bad += models::pointcloud_to_image(shuffled, s) != img;
  }
  return {oracle_bad == 0 && order_bad == 0 && worst_sum <= 1e-9,
          fmt("100 clouds: oracle mismatches %d, order-dependent %d, max sum error %.1e (tol 1e-9)", oracle_bad,
              order_bad, worst_sum)};
}

// 5. Loss formula.
Outcome loss() {
  const auto a = nn::softmax_cross_entropy(std::vector<double>{0.0, 0.0}, 0);
  const double e_loss = std::abs(a.loss - std::log(2.0));
  double e_grad = 0.0;
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const std::vector<double> z{rng.uniform(-30, 30), rng.uniform(-30, 30)};
    const int y = static_cast<int>(rng.below(2));
    const auto r = nn::softmax_cross_entropy(z, y);
    for (int c = 0; c < 2; ++c) e_grad = std::max(e_grad, std::abs(r.grad[c] - (r.probs[c] - (c == y))));
  }
  const auto big = nn::softmax_cross_entropy(std::vector<double>{1000.0, 0.0}, 0);
  const auto big_wrong = nn::softmax_cross_entropy(std::vector<double>{1000.0, -1000.0}, 1);
  const bool finite = std::isfinite(big.loss) && std::isfinite(big_wrong.loss) && std::isfinite(big.grad[0]) &&
                      std::isfinite(big_wrong.grad[1]);
  return {e_loss <= 1e-12 && e_grad <= 1e-12 && finite,
          fmt("|L(0,0) - ln2| = %.1e, max |grad - (p - y)| = %.1e, L at |z| = 1000: %.3g and %.3g", e_loss, e_grad,
              big.loss, big_wrong.loss)};
}

// 6. Synthetic replication of the paper's protocol.
Outcome protocol() {
  const auto start = Clock::now();
  double dg = 0.0, pn = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : kSeeds) {
    const auto cfg = default_run(seed);
    const Dataset ds = synth::generate_dataset(cfg.gen);
    const double d = train::train_and_evaluate(ds, "dgcnn", cfg.exp).metrics.test_accuracy;
    const double p = train::train_and_evaluate(ds, "pointnet", cfg.exp).metrics.test_accuracy;
    dg += d / 3.0;
    pn += p / 3.0;
    per_seed += fmt(" %llu:%.3f/%.3f", static_cast<unsigned long long>(seed), d, p);
  }
  const double seconds = since(start);
  return {dg >= 0.85 && dg > 0.5 && pn >= 0.70 && seconds <= 900.0,
          fmt("mean test accuracy DGCNN(K=10) %.4f (need >= 0.85), PointNet %.4f (need >= 0.70), %.0f s (limit 900);"
              " per seed dgcnn/pointnet%s",
              dg, pn, seconds, per_seed.c_str())};
}

// 7. Table I sweep.
Outcome sweep() {
  const auto cfg = default_run(kSeeds[0]);
  const Dataset ds = synth::generate_dataset(cfg.gen);
  const auto start = Clock::now();
  const auto rows = train::k_sweep(ds, {5, 10, 15, 20, 30}, cfg.exp);
  const double seconds = since(start);
  bool above = rows.size() == 5;
  std::string list;
  for (const auto& r : rows) {
    above &= r.accuracy >= 0.5;
    list += fmt(" K=%d:%.3f", r.k, r.accuracy);
  }
  // Each row is an independent training; repeating one confirms the rows
  // are reproducible without paying for the whole sweep twice.
  const auto again = train::k_sweep(ds, {5}, cfg.exp);
  const std::string csv = train::sweep_csv(rows);
  const bool repro = csv.find(train::sweep_csv(again).substr(11)) != std::string::npos;
  return {above && repro, fmt("5 rows%s, all >= 0.5: %s, K=5 rerun identical: %s, %.0f s", list.c_str(),
                              above ? "yes" : "no", repro ? "yes" : "no", seconds)};
}

// 8. Second-order convergence of the discrete Laplacian.
Outcome physics() {
  double lo = 1e9, hi = 0.0;
  for (int g : {32, 64}) {
    for (int m = 0; m <= 4; ++m) {
      for (int n = 0; n <= 4; ++n) {
        if (m == 0 && n == 0) continue;
        const double ratio = synth::helmholtz_mode_residual(m, n, g) / synth::helmholtz_mode_residual(m, n, 2 * g - 1);
        lo = std::min(lo, ratio);
        hi = std::max(hi, ratio);
      }
    }
  }
  return {lo >= 3.5 && hi <= 4.5, fmt("grid-halving ratios in [%.3f, %.3f] for 1 <= m+n, m,n <= 4, grid 32 and 64", lo, hi)};
}

int run_cli(const std::string& args, const fs::path& out) {
  const std::string cmd = std::string(FEMPC_CLI) + " " + args + " > " + out.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

// 9. End-to-end determinism through the CLI.
Outcome determinism() {
  TempDir dir("accept-determinism");
  std::ofstream(dir.path() / "dgcnn.cfg") << "epochs = 3\n";
  std::string runs[2];
  int codes = 0;
  for (int r = 0; r < 2; ++r) {
    const fs::path base = dir.path() / ("run" + std::to_string(r));
    const fs::path data = base / "data";
    codes |= run_cli("gen --seed 42 --out " + data.string(), dir.path() / "log");
    std::string blob;
    for (const auto& e : std::set<fs::path>{fs::directory_iterator(data), fs::directory_iterator()}) {
      blob += e.filename().string() + slurp(e);
    }
    codes |= run_cli("train --model pointnet --seed 42 --data " + data.string() + " --out " + (base / "pn").string(),
                     dir.path() / "log");
    codes |= run_cli("train --model dgcnn --seed 42 --config " + (dir.path() / "dgcnn.cfg").string() + " --data " +
                         data.string() + " --out " + (base / "dg").string(),
                     dir.path() / "log");
    for (const char* m : {"pn", "dg"}) {
      codes |= run_cli("eval --checkpoint " + (base / m / "model.ckpt").string() + " --data " + data.string(),
                       base / (std::string(m) + ".eval"));
      blob += slurp(base / m / "model.ckpt") + slurp(base / m / "metrics.csv") + slurp(base / (std::string(m) + ".eval"));
    }
    runs[r] = std::move(blob);
  }
  const bool same = runs[0] == runs[1];
  return {codes == 0 && same,
          fmt("gen -> train (pointnet 20 epochs, dgcnn 3 epochs) -> eval twice: exit codes %s, outputs %s (%zu bytes)",
              codes ? "nonzero" : "zero", same ? "bit-identical" : "DIFFER", runs[0].size())};
}

// 10. Serialization round trips.
Outcome round_trip() {
  TempDir dir("accept-roundtrip");
  Dataset ds = synth::generate_dataset(default_run(42).gen);
  ds.samples[0].cloud.data(0, 2) = 1e-310;
  ds.samples[0].cloud.data(1, 2) = -0.0;
  ds.samples[0].cloud.data(2, 2) = 1.7976931348623157e308;
  ds.samples[0].cloud.data(3, 2) = 0.1 + 0.2;
  write_dataset(ds, dir.path() / "data");
  const Dataset back = read_dataset(dir.path() / "data");
  std::size_t values = 0, bad = 0;
  for (std::size_t s = 0; s < ds.size(); ++s) {
    const auto& a = ds.samples[s].cloud.data;
    const auto& b = back.samples[s].cloud.data;
    bad += a.rows() != b.rows() || ds.samples[s].label.class_id != back.samples[s].label.class_id;
    for (Eigen::Index i = 0; i < std::min(a.size(), b.size()); ++i, ++values) bad += !same_bits(a.data()[i], b.data()[i]);
  }
  bad += back.metadata != ds.metadata;

  Rng rng(10);
  models::DgcnnConfig dc;
  dc.init_seed = 99;
  auto params = models::dgcnn_init(dc);
  auto tensors = params.tensors();
  for (auto& t : tensors) {
    for (double& v : t.values) v = rng.uniform(-1, 1) * std::pow(10.0, rng.uniform(-300, 300));
  }
  nn::write_checkpoint(dir.path() / "m.ckpt", "dgcnn", dc.to_key_values(), tensors);
  const auto ck = nn::read_checkpoint(dir.path() / "m.ckpt");
  auto restored = models::dgcnn_init(dc);
  auto rt = restored.tensors();
  nn::load_tensors(ck, rt);
  std::size_t ck_values = 0, ck_bad = ck.config != dc.to_key_values();
  for (std::size_t t = 0; t < tensors.size(); ++t) {
    for (std::size_t i = 0; i < tensors[t].values.size(); ++i, ++ck_values) {
      ck_bad += !same_bits(tensors[t].values[i], rt[t].values[i]);
    }
  }
  return {bad == 0 && ck_bad == 0, fmt("dataset %zu values, %zu differ; checkpoint %zu values, %zu differ", values, bad,
                                       ck_values, ck_bad)};
}

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradients}, {"permutation invariance", permutation},
      {"knn oracle", knn},                 {"projection exactness", projection},
      {"loss formula", loss},              {"protocol replication", protocol},
      {"k sweep", sweep},                  {"generator physics", physics},
      {"determinism", determinism},        {"round trip", round_trip},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));
  int failures = 0;
  for (std::size_t c = 0; c < criteria.size(); ++c) {
    const int id = static_cast<int>(c) + 1;
    if (!only.empty() && !only.contains(id)) continue;
    Outcome o;
    try {
      o = criteria[c].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failures += !o.pass;
    std::printf("criterion %2d %s  %s: %s\n", id, o.pass ? "PASS" : "FAIL", criteria[c].first, o.detail.c_str());
    std::fflush(stdout);
  }
  return failures;
}
