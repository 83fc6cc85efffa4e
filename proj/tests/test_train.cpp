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

#include <algorithm>
#include <random>
#include <set>

#include "doctest.h"
#include "fempc/error.hpp"
#include "fempc/synth.hpp"
#include "fempc/train/experiment.hpp"
#include "helpers.hpp"

using namespace fempc;
using namespace fempc::train;
using fempc::testing::random_cloud;

namespace {

Dataset labeled_dataset(int n_per_class, Rng& rng) {
  Dataset ds;
  for (int i = 0; i < 2 * n_per_class; ++i) {
    ds.samples.push_back({"s" + std::to_string(i), random_cloud(12, 2, 1, rng), Label{i % 2}});
  }
  return ds;
}

// Two displaced Gaussian clusters; every cloud is two points of one cluster.
struct Toy {
  std::vector<Matrix> clouds;
  std::vector<int> labels;
};

Toy toy_set(int n, std::uint64_t seed) {
  std::mt19937_64 gen(seed);
  std::normal_distribution<double> noise(0.0, 0.3);
  Toy t;
  for (int i = 0; i < n; ++i) {
    const int y = i % 2;
    const double centre = y ? 1.0 : -1.0;
    Matrix c(2, 3);
    for (int p = 0; p < 2; ++p) c.row(p) << centre + noise(gen), centre + noise(gen), noise(gen);
    t.clouds.push_back(c);
    t.labels.push_back(y);
  }
  return t;
}

int class_count(const Dataset& ds, const std::vector<int>& idx, int c) {
  return static_cast<int>(std::count_if(idx.begin(), idx.end(), [&](int i) { return ds.samples[i].label.class_id == c; }));
}

}  // namespace

TEST_CASE("72 samples split 48 / 24, stratified, disjoint and exhaustive") {
  Rng rng(51);
  const Dataset ds = labeled_dataset(36, rng);
  const auto s = split_dataset(ds, 2.0 / 3.0, 9);
  CHECK(s.train.size() == 48);
  CHECK(s.test.size() == 24);
  std::set<int> all(s.train.begin(), s.train.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 72);
  CHECK(*all.begin() == 0);
  CHECK(*all.rbegin() == 71);
  CHECK(class_count(ds, s.train, 1) == 24);
  CHECK(class_count(ds, s.test, 1) == 12);

  const auto again = split_dataset(ds, 2.0 / 3.0, 9);
  CHECK(again.train == s.train);
  CHECK(again.test == s.test);
  CHECK(split_dataset(ds, 2.0 / 3.0, 10).train != s.train);
}

TEST_CASE("stratification holds for odd class sizes and many seeds") {
  Rng rng(52);
  Dataset ds;
  for (int i = 0; i < 31; ++i) ds.samples.push_back({"s" + std::to_string(i), random_cloud(4, 2, 1, rng), Label{i < 11}});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto s = split_dataset(ds, 0.6, seed);
    CHECK(s.train.size() == 19);  // round(0.6 * 31)
    for (int c = 0; c < 2; ++c) {
      const int total = class_count(ds, s.train, c) + class_count(ds, s.test, c);
      CHECK(std::abs(class_count(ds, s.train, c) - 0.6 * total) <= 1.0);
      CHECK(class_count(ds, s.test, c) >= 1);
    }
  }
}

TEST_CASE("split errors") {
  Rng rng(53);
  Dataset tiny = labeled_dataset(1, rng);
  CHECK_THROWS_AS(split_dataset(tiny, 0.5, 1), InvalidArgument);
  Dataset lonely = labeled_dataset(3, rng);
  lonely.samples[1].label = Label{0};
  lonely.samples[3].label = Label{0};
  CHECK_THROWS_AS(split_dataset(lonely, 0.5, 1), InvalidArgument);  // class 1 has one sample
  CHECK_THROWS_AS(split_dataset(labeled_dataset(5, rng), 1.0, 1), InvalidArgument);
}

TEST_CASE("confusion counts and accuracy") {
  const auto c = confusion_of(std::vector<int>{0, 1, 1}, std::vector<int>{0, 1, 0});
  CHECK(c.accuracy() == doctest::Approx(2.0 / 3.0));
  CHECK(c.tp == 1);
  CHECK(c.tn == 1);
  CHECK(c.fp == 1);
  CHECK(c.fn == 0);
  const auto perfect = confusion_of(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1});
  CHECK(perfect.accuracy() == 1.0);
  CHECK(perfect.fp + perfect.fn == 0);
  Confusion paper;
  for (int i = 0; i < 24; ++i) paper.add(i < 19 ? 1 : 0, 1);
  CHECK(paper.accuracy() == 19.0 / 24.0);
  CHECK(format6(paper.accuracy()) == "0.791667");
}

TEST_CASE("metrics csv format") {
  Metrics m;
  m.epoch_loss = {0.693147, 0.25};
  m.test_accuracy = 19.0 / 24.0;
  CHECK(metrics_csv(m) == "epoch,mean_loss\n1,0.693147\n2,0.25\ntest_accuracy,0.791667\n");
}

TEST_CASE("toy separable set is learned by PointNet") {
  // Default training mode. Normalizing each 2-point cloud by its own
  // statistics maps both points to +-gamma whatever the cluster, so the set
  // is only separable when batch norm uses running statistics.
  const Toy toy = toy_set(24, 7);
  PointNetModel model;
  model.config.init_seed = 3;
  TrainingConfig cfg;
  cfg.shuffle_seed = 4;
  const auto trained = train_model(model, std::span<const Matrix>(toy.clouds), toy.labels, cfg);
  const auto acc = evaluate_accuracy(model, trained.params, std::span<const Matrix>(toy.clouds), toy.labels);
  CHECK(acc.accuracy() == 1.0);
  const auto& loss = trained.metrics.epoch_loss;
  REQUIRE(loss.size() == 20);
  // 5% relative regression, plus an absolute floor once the loss is ~0.
  for (std::size_t e = 3; e < loss.size(); ++e) CHECK(loss[e] <= 1.05 * loss[e - 1] + 0.01);
}

TEST_CASE("zero learning rate leaves trainable weights unchanged") {
  const Toy toy = toy_set(6, 8);
  PointNetModel model;
  model.config.mlp_widths = {8, 16};
  model.config.head_widths = {4, 2};
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.optimizer.learning_rate = 0.0;
  auto initial = model.init();
  auto trained = train_model(model, std::span<const Matrix>(toy.clouds), toy.labels, cfg, initial);
  const auto a = initial.tensors(), b = trained.params.tensors();
  for (std::size_t t = 0; t < a.size(); ++t) {
    if (!a[t].trainable) continue;
    CHECK(std::equal(a[t].values.begin(), a[t].values.end(), b[t].values.begin()));
  }
}

TEST_CASE("training is deterministic") {
  const Toy toy = toy_set(8, 9);
  DgcnnModel model;
  model.config.k_neighbors = 1;
  model.config.edge_widths = {8, 8};
  model.config.embed_width = 16;
  model.config.head_widths = {8, 2};
  model.config.init_seed = 5;
  TrainingConfig cfg;
  cfg.epochs = 3;
  cfg.shuffle_seed = 6;
  const auto a = train_model(model, std::span<const Matrix>(toy.clouds), toy.labels, cfg);
  const auto b = train_model(model, std::span<const Matrix>(toy.clouds), toy.labels, cfg);
  CHECK(a.metrics.epoch_loss == b.metrics.epoch_loss);
  auto pa = a.params, pb = b.params;
  const auto ta = pa.tensors(), tb = pb.tensors();
  for (std::size_t t = 0; t < ta.size(); ++t) {
    CHECK(std::equal(ta[t].values.begin(), ta[t].values.end(), tb[t].values.begin()));
  }
}

TEST_CASE("experiment config key round trip and unknown keys") {
  ExperimentConfig cfg;
  cfg.training.epochs = 7;
  cfg.training.train_mode = Mode::kTrain;
  cfg.training.bn_momentum = 0.9;
  cfg.dgcnn.k_neighbors = 15;
  cfg.channel_norm = ChannelNorm::kPerCloud;
  ExperimentConfig back;
  CHECK(back.apply(cfg.to_key_values()).empty());
  CHECK(back.to_key_values() == cfg.to_key_values());
  CHECK(back.digest() == cfg.digest());
  const auto unknown = back.apply({{"dgcnn.k", "3"}, {"epochs", "2"}});
  CHECK(unknown == std::vector<std::string>{"dgcnn.k"});
  CHECK(back.training.epochs == 2);
  CHECK_THROWS_AS(back.apply({{"batch_norm_stats", "global"}}), InvalidArgument);
  CHECK_THROWS_AS(back.apply({{"batch_norm_momentum", "1"}}), InvalidArgument);
}

TEST_CASE("dataset channel statistics are fitted on the given indices") {
  Rng rng(54);
  Dataset ds = labeled_dataset(2, rng);
  for (int i = 0; i < 4; ++i) ds.samples[i].cloud.data.col(2).setConstant(i);
  const std::vector<int> fit{0, 2};
  const auto spec = fit_input_spec(ds, fit, ChannelNorm::kDataset);
  CHECK(spec.channel_mean[0] == 1.0);
  CHECK(spec.channel_scale[0] == 1.0);
  CHECK(InputSpec::from_key_values(spec.to_key_values()).channel_mean == spec.channel_mean);
  const auto p = prepare_cloud(ds.samples[3].cloud, spec);
  CHECK(p.data(0, 2) == 2.0);
}

TEST_CASE("k_sweep validates K values") {
  Rng rng(55);
  const Dataset ds = labeled_dataset(3, rng);
  ExperimentConfig cfg;
  CHECK_THROWS_AS(k_sweep(ds, {5, 5}, cfg), InvalidArgument);
  CHECK_THROWS_AS(k_sweep(ds, {12}, cfg), InvalidArgument);
  CHECK_THROWS_AS(k_sweep(ds, {}, cfg), InvalidArgument);
}

TEST_CASE("end-to-end runs on a small generated dataset") {
  synth::GeneratorConfig g;
  g.grid_n = 6;
  g.n_samples = 12;
  g.seed = 3;
  const Dataset ds = synth::generate_dataset(g);
  ExperimentConfig cfg;
  cfg.training.epochs = 2;
  cfg.pointnet.mlp_widths = {8, 16};
  cfg.pointnet.head_widths = {4, 2};
  cfg.dgcnn.k_neighbors = 4;
  cfg.dgcnn.edge_widths = {8, 8};
  cfg.dgcnn.embed_width = 16;
  cfg.dgcnn.head_widths = {4, 2};
  cfg.cnn.resolution = 8;
  cfg.cnn.channels = {2, 4, 4};
  cfg.cnn.epochs = 2;

  const auto rows = model_comparison(ds, cfg);
  REQUIRE(rows.size() == 3);
  CHECK(rows[0].model == "cnn_xy");
  CHECK(rows[1].model == "pointnet");
  CHECK(rows[2].model == "dgcnn");
  CHECK(comparison_csv(rows).rfind("model,accuracy\ncnn_xy,", 0) == 0);
  CHECK(comparison_csv(model_comparison(ds, cfg)) == comparison_csv(rows));

  const auto sweep = k_sweep(ds, {2, 4}, cfg);
  REQUIRE(sweep.size() == 2);
  CHECK(sweep[1].k == 4);
  CHECK(sweep_csv(sweep).rfind("k,accuracy\n2,", 0) == 0);

  fempc::testing::TempDir dir("train");
  for (const char* type : {"pointnet", "dgcnn", "cnn"}) {
    auto run = train_and_evaluate(ds, type, cfg);
    CHECK(run.metrics.test_accuracy == run.metrics.confusion.accuracy());
    CHECK(run.metrics.confusion.total() == 4);
    save_model(run, dir.path() / "m.ckpt");
    auto back = load_model(dir.path() / "m.ckpt");
    CHECK(back.model_type == type);
    CHECK(back.header == run.header);
    CHECK(evaluate_model(back, ds, false) == run.metrics.confusion);
    CHECK(evaluate_model(back, ds, true).total() == 12);
  }
}
