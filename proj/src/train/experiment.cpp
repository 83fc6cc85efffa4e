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

#include "fempc/train/experiment.hpp"

#include <algorithm>
#include <cmath>

#include "fempc/error.hpp"

namespace fempc::train {

std::string to_string(ChannelNorm n) { return n == ChannelNorm::kPerCloud ? "per_cloud" : "dataset"; }

ChannelNorm channel_norm_from_string(const std::string& s) {
  if (s == "per_cloud") return ChannelNorm::kPerCloud;
  if (s == "dataset") return ChannelNorm::kDataset;
  throw InvalidArgument("channel_norm must be 'per_cloud' or 'dataset', got '" + s + "'");
}

namespace {

std::string join_doubles(const std::vector<double>& v) {
  if (v.empty()) return "none";
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_exact(v[i]);
  return s;
}

std::vector<double> parse_doubles_or_none(const std::string& key, const std::string& v) {
  return v == "none" ? std::vector<double>{} : parse_double_list(key, v);
}

KeyValues with_prefix(const std::string& prefix, const KeyValues& kv) {
  KeyValues out;
  for (const auto& [k, v] : kv) out[prefix + k] = v;
  return out;
}

KeyValues strip_prefix(const std::string& prefix, const KeyValues& kv) {
  KeyValues out;
  for (const auto& [k, v] : kv) {
    if (k.rfind(prefix, 0) == 0) out[k.substr(prefix.size())] = v;
  }
  return out;
}

void merge(KeyValues& into, const KeyValues& from) { into.insert(from.begin(), from.end()); }

}  // namespace

KeyValues InputSpec::to_key_values() const {
  return {{"channel_norm", to_string(channel_norm)},
          {"channel_mean", join_doubles(channel_mean)},
          {"channel_scale", join_doubles(channel_scale)}};
}

InputSpec InputSpec::from_key_values(const KeyValues& kv) {
  InputSpec s;
  for (const auto& [k, v] : kv) {
    if (k == "channel_norm") s.channel_norm = channel_norm_from_string(v);
    else if (k == "channel_mean") s.channel_mean = parse_doubles_or_none(k, v);
    else if (k == "channel_scale") s.channel_scale = parse_doubles_or_none(k, v);
    else throw InvalidArgument("input spec: unknown key '" + k + "'");
  }
  return s;
}

InputSpec fit_input_spec(const Dataset& dataset, std::span<const int> fit_indices, ChannelNorm norm) {
  InputSpec spec;
  spec.channel_norm = norm;
  if (norm == ChannelNorm::kPerCloud || dataset.empty()) return spec;
  const int d = dataset.samples.front().cloud.spatial_dim;
  const int c = dataset.samples.front().cloud.n_channels;
  spec.channel_mean.assign(c, 0.0);
  spec.channel_scale.assign(c, 1.0);
  for (int ch = 0; ch < c; ++ch) {
    double sum = 0.0, sq = 0.0, count = 0.0;
    for (int i : fit_indices) {
      const auto col = dataset.samples[i].cloud.data.col(d + ch);
      sum += col.sum();
      count += static_cast<double>(col.size());
    }
    const double mean = sum / count;
    for (int i : fit_indices) sq += (dataset.samples[i].cloud.data.col(d + ch).array() - mean).square().sum();
    const double sd = std::sqrt(sq / count);
    spec.channel_mean[ch] = mean;
    spec.channel_scale[ch] = sd > 0.0 ? sd : 1.0;
  }
  return spec;
}

PointCloud prepare_cloud(const PointCloud& cloud, const InputSpec& spec) {
  if (spec.channel_norm == ChannelNorm::kPerCloud) return normalize_spatial(cloud);
  return normalize_with_channel_stats(cloud, spec.channel_mean, spec.channel_scale);
}

KeyValues ExperimentConfig::to_key_values() const {
  KeyValues kv = training.to_key_values();
  kv["channel_norm"] = to_string(channel_norm);
  auto pn = pointnet.to_key_values();
  pn.erase("input_dim");
  auto dg = dgcnn.to_key_values();
  dg.erase("input_dim");
  auto pr = projection.to_key_values();
  pr.erase("bounds0");
  pr.erase("bounds1");
  pr.erase("resolution");
  merge(kv, with_prefix("pointnet.", pn));
  merge(kv, with_prefix("dgcnn.", dg));
  merge(kv, with_prefix("cnn.", cnn.to_key_values()));
  merge(kv, with_prefix("projection.", pr));
  return kv;
}

std::vector<std::string> ExperimentConfig::apply(const KeyValues& kv) {
  std::vector<std::string> unknown;
  KeyValues pn = pointnet.to_key_values(), dg = dgcnn.to_key_values(), cn = cnn.to_key_values();
  KeyValues pr = projection.to_key_values();
  for (const auto& [k, v] : kv) {
    if (k == "epochs") training.epochs = static_cast<int>(parse_int(k, v));
    else if (k == "batch_size") training.batch_size = static_cast<int>(parse_int(k, v));
    else if (k == "learning_rate") training.optimizer.learning_rate = parse_double(k, v);
    else if (k == "momentum") training.optimizer.momentum = parse_double(k, v);
    else if (k == "split_train_fraction") training.split_train_fraction = parse_double(k, v);
    else if (k == "split_seed") training.split_seed = parse_u64(k, v);
    else if (k == "shuffle_seed") training.shuffle_seed = parse_u64(k, v);
    else if (k == "shuffle_each_epoch") training.shuffle_each_epoch = parse_bool(k, v);
    else if (k == "batch_norm_momentum") training.bn_momentum = parse_double(k, v);
    else if (k == "batch_norm_stats") {
      if (v != "cloud" && v != "running") throw InvalidArgument("batch_norm_stats must be cloud or running");
      training.train_mode = v == "cloud" ? Mode::kTrain : Mode::kTrainRunning;
    } else if (k == "channel_norm") channel_norm = channel_norm_from_string(v);
    else if (k.rfind("pointnet.", 0) == 0 && pn.contains(k.substr(9)) && k != "pointnet.input_dim") pn[k.substr(9)] = v;
    else if (k.rfind("dgcnn.", 0) == 0 && dg.contains(k.substr(6)) && k != "dgcnn.input_dim") dg[k.substr(6)] = v;
    else if (k.rfind("cnn.", 0) == 0 && cn.contains(k.substr(4))) cn[k.substr(4)] = v;
    else if (k == "projection.plane" || k == "projection.field_channel") pr[k.substr(11)] = v;
    else unknown.push_back(k);
  }
  pointnet = models::PointNetConfig::from_key_values(pn);
  dgcnn = models::DgcnnConfig::from_key_values(dg);
  cnn = models::CnnConfig::from_key_values(cn);
  projection = models::ProjectionSpec::from_key_values(pr);
  training.validate();
  return unknown;
}

std::string ExperimentConfig::digest() const { return digest_hex(render_key_values(to_key_values())); }

nn::TensorList ModelRun::tensors() {
  return std::visit([](auto& p) { return p.tensors(); }, params);
}

namespace {

struct Prepared {
  std::vector<Matrix> inputs;
  std::vector<int> labels;
};

Prepared prepare_points(const Dataset& ds, std::span<const int> idx, const InputSpec& spec) {
  Prepared p;
  for (int i : idx) {
    p.inputs.push_back(prepare_cloud(ds.samples[i].cloud, spec).data);
    p.labels.push_back(ds.samples[i].label.class_id);
  }
  return p;
}

struct PreparedImages {
  std::vector<models::GrayImage> inputs;
  std::vector<int> labels;
};

models::ProjectionSpec fit_projection(const Dataset& ds, const InputSpec& spec, models::ProjectionSpec proj,
                                      int resolution) {
  Dataset normalized;
  for (const auto& s : ds.samples) normalized.samples.push_back({s.sample_id, prepare_cloud(s.cloud, spec), s.label});
  proj.resolution = resolution;
  proj.validate(ds.samples.front().cloud.spatial_dim);
  proj.bounds = models::dataset_bounds(normalized, proj.plane);
  return proj;
}

PreparedImages prepare_images(const Dataset& ds, std::span<const int> idx, const InputSpec& spec,
                              const models::ProjectionSpec& proj) {
  PreparedImages p;
  p.inputs.resize(idx.size());
  const int n = static_cast<int>(idx.size());
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < n; ++j) {
    p.inputs[j] = models::pointcloud_to_image(prepare_cloud(ds.samples[idx[j]].cloud, spec), proj);
  }
  for (int i : idx) p.labels.push_back(ds.samples[i].label.class_id);
  return p;
}

std::vector<int> all_indices(const Dataset& ds) {
  std::vector<int> v(ds.size());
  std::iota(v.begin(), v.end(), 0);
  return v;
}

int min_points(const Dataset& ds) {
  int m = ds.samples.front().cloud.n_points();
  for (const auto& s : ds.samples) m = std::min(m, s.cloud.n_points());
  return m;
}

}  // namespace

ModelRun train_and_evaluate(const Dataset& dataset, const std::string& model_type, const ExperimentConfig& cfg) {
  cfg.training.validate();
  const Split split = split_dataset(dataset, cfg.training.split_train_fraction, cfg.training.split_seed);
  return train_and_evaluate(dataset, split, model_type, cfg);
}

ModelRun train_and_evaluate(const Dataset& dataset, const Split& split, const std::string& model_type,
                            const ExperimentConfig& cfg) {
  if (auto v = validate_dataset(dataset); !v) throw InvalidArgument(v.message);
  if (dataset.empty()) throw InvalidArgument("empty dataset");
  const auto& first = dataset.samples.front().cloud;
  const int input_dim = first.width();
  const InputSpec spec = fit_input_spec(dataset, split.train, cfg.channel_norm);

  ModelRun run;
  run.model_type = model_type;
  run.header = cfg.training.to_key_values();
  merge(run.header, with_prefix("input.", spec.to_key_values()));
  if (auto it = dataset.metadata.find("config_digest"); it != dataset.metadata.end()) {
    run.header["dataset.config_digest"] = it->second;
  }
  run.header["experiment_digest"] = cfg.digest();

  if (model_type == "pointnet" || model_type == "dgcnn") {
    const auto train = prepare_points(dataset, split.train, spec);
    const auto test = prepare_points(dataset, split.test, spec);
    if (model_type == "pointnet") {
      PointNetModel model{cfg.pointnet};
      model.config.input_dim = input_dim;
      auto trained = train_model(model, std::span<const Matrix>(train.inputs), train.labels, cfg.training);
      run.metrics = trained.metrics;
      run.metrics.confusion = evaluate_accuracy(model, trained.params, std::span<const Matrix>(test.inputs), test.labels);
      merge(run.header, with_prefix("pointnet.", model.config.to_key_values()));
      run.params = std::move(trained.params);
    } else {
      DgcnnModel model{cfg.dgcnn};
      model.config.input_dim = input_dim;
      if (min_points(dataset) <= model.config.k_neighbors) {
        throw InvalidArgument("dgcnn: K = " + std::to_string(model.config.k_neighbors) +
                              " must be below the smallest cloud size " + std::to_string(min_points(dataset)));
      }
      auto trained = train_model(model, std::span<const Matrix>(train.inputs), train.labels, cfg.training);
      run.metrics = trained.metrics;
      run.metrics.confusion = evaluate_accuracy(model, trained.params, std::span<const Matrix>(test.inputs), test.labels);
      merge(run.header, with_prefix("dgcnn.", model.config.to_key_values()));
      run.params = std::move(trained.params);
    }
  } else if (model_type == "cnn") {
    const auto proj = fit_projection(dataset, spec, cfg.projection, cfg.cnn.resolution);
    if (proj.field_channel >= first.n_channels) throw InvalidArgument("cnn: dataset has no field channel to project");
    const auto train = prepare_images(dataset, split.train, spec, proj);
    const auto test = prepare_images(dataset, split.test, spec, proj);
    CnnModel model{cfg.cnn};
    TrainingConfig tc = cfg.training;
    tc.epochs = cfg.cnn.epochs;
    auto trained = train_model(model, std::span<const models::GrayImage>(train.inputs), train.labels, tc);
    run.metrics = trained.metrics;
    run.metrics.confusion =
        evaluate_accuracy(model, trained.params, std::span<const models::GrayImage>(test.inputs), test.labels);
    merge(run.header, with_prefix("cnn.", model.config.to_key_values()));
    merge(run.header, with_prefix("projection.", proj.to_key_values()));
    run.header["epochs"] = std::to_string(tc.epochs);
    run.params = std::move(trained.params);
  } else {
    throw InvalidArgument("unknown model type '" + model_type + "' (expected pointnet, dgcnn or cnn)");
  }
  run.metrics.test_accuracy = run.metrics.confusion.accuracy();
  run.metrics.config_digest = digest_hex(render_key_values(run.header));
  return run;
}

void save_model(const ModelRun& run, const std::filesystem::path& path) {
  auto copy = run;
  nn::write_checkpoint(path, run.model_type, run.header, copy.tensors());
}

ModelRun load_model(const std::filesystem::path& path) {
  const nn::Checkpoint ck = nn::read_checkpoint(path);
  ModelRun run;
  run.model_type = ck.model_type;
  run.header = ck.config;
  try {
    if (ck.model_type == "pointnet") {
      run.params = models::pointnet_init(models::PointNetConfig::from_key_values(strip_prefix("pointnet.", ck.config)));
    } else if (ck.model_type == "dgcnn") {
      run.params = models::dgcnn_init(models::DgcnnConfig::from_key_values(strip_prefix("dgcnn.", ck.config)));
    } else if (ck.model_type == "cnn") {
      run.params = models::cnn_init(models::CnnConfig::from_key_values(strip_prefix("cnn.", ck.config)));
    } else {
      throw IoError("corrupt checkpoint: unknown model type '" + ck.model_type + "'");
    }
    nn::load_tensors(ck, run.tensors());
  } catch (const InvalidArgument& e) {
    throw IoError(std::string("corrupt checkpoint: ") + e.what());
  }
  return run;
}

Confusion evaluate_model(ModelRun& run, const Dataset& dataset, bool all_samples) {
  if (auto v = validate_dataset(dataset); !v) throw InvalidArgument(v.message);
  const auto& h = run.header;
  auto get = [&](const std::string& k) {
    auto it = h.find(k);
    if (it == h.end()) throw IoError("corrupt checkpoint: missing header key '" + k + "'");
    return it->second;
  };
  std::vector<int> idx;
  if (all_samples) {
    idx = all_indices(dataset);
  } else {
    idx = split_dataset(dataset, parse_double("split_train_fraction", get("split_train_fraction")),
                        parse_u64("split_seed", get("split_seed")))
              .test;
  }
  const InputSpec spec = InputSpec::from_key_values(strip_prefix("input.", h));
  const auto& cloud = dataset.samples.front().cloud;
  if (spec.channel_norm == ChannelNorm::kDataset && spec.channel_mean.size() != static_cast<std::size_t>(cloud.n_channels)) {
    throw InvalidArgument("dimension mismatch: checkpoint expects " + std::to_string(spec.channel_mean.size()) +
                          " channels, dataset has " + std::to_string(cloud.n_channels));
  }

  if (run.model_type == "pointnet" || run.model_type == "dgcnn") {
    const std::string prefix = run.model_type + ".";
    const int input_dim = static_cast<int>(parse_int("input_dim", get(prefix + "input_dim")));
    if (input_dim != cloud.width()) {
      throw InvalidArgument("dimension mismatch: checkpoint expects d+C = " + std::to_string(input_dim) +
                            ", dataset has " + std::to_string(cloud.width()));
    }
    const auto data = prepare_points(dataset, idx, spec);
    if (run.model_type == "pointnet") {
      PointNetModel model{models::PointNetConfig::from_key_values(strip_prefix(prefix, h))};
      return evaluate_accuracy(model, std::get<models::PointNetParams>(run.params), std::span<const Matrix>(data.inputs),
                               data.labels);
    }
    DgcnnModel model{models::DgcnnConfig::from_key_values(strip_prefix(prefix, h))};
    if (min_points(dataset) <= model.config.k_neighbors) {
      throw InvalidArgument("dgcnn checkpoint K exceeds the smallest cloud size");
    }
    return evaluate_accuracy(model, std::get<models::DgcnnParams>(run.params), std::span<const Matrix>(data.inputs),
                             data.labels);
  }
  const auto proj = models::ProjectionSpec::from_key_values(strip_prefix("projection.", h));
  proj.validate(cloud.spatial_dim);
  if (proj.field_channel >= cloud.n_channels) throw InvalidArgument("dataset lacks the projected field channel");
  const auto data = prepare_images(dataset, idx, spec, proj);
  CnnModel model{models::CnnConfig::from_key_values(strip_prefix("cnn.", h))};
  return evaluate_accuracy(model, std::get<models::CnnParams>(run.params),
                           std::span<const models::GrayImage>(data.inputs), data.labels);
}

std::vector<SweepRow> k_sweep(const Dataset& dataset, const std::vector<int>& ks, const ExperimentConfig& cfg) {
  if (ks.empty()) throw InvalidArgument("k_sweep: empty K list");
  std::vector<int> sorted = ks;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) throw InvalidArgument("k_sweep: K values must be distinct");
  const int n_min = min_points(dataset);
  for (int k : ks) {
    if (k < 1 || k >= n_min) {
      throw InvalidArgument("k_sweep: K = " + std::to_string(k) + " must lie in [1, " + std::to_string(n_min - 1) + "]");
    }
  }
  const Split split = split_dataset(dataset, cfg.training.split_train_fraction, cfg.training.split_seed);
  std::vector<SweepRow> rows;
  for (int k : ks) {
    ExperimentConfig c = cfg;
    c.dgcnn.k_neighbors = k;
    c.dgcnn.init_seed = derive_seed(cfg.dgcnn.init_seed, static_cast<std::uint64_t>(k));
    rows.push_back({k, train_and_evaluate(dataset, split, "dgcnn", c).metrics.test_accuracy});
  }
  return rows;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "k,accuracy\n";
  for (const auto& r : rows) out += std::to_string(r.k) + "," + format6(r.accuracy) + "\n";
  return out;
}

std::vector<ComparisonRow> model_comparison(const Dataset& dataset, const ExperimentConfig& cfg) {
  if (dataset.empty()) throw InvalidArgument("model_comparison: empty dataset");
  const int d = dataset.samples.front().cloud.spatial_dim;
  if (d < 2) throw InvalidArgument("model_comparison: need d >= 2");
  const Split split = split_dataset(dataset, cfg.training.split_train_fraction, cfg.training.split_seed);
  std::vector<std::array<int, 2>> planes{{0, 1}};
  if (d == 3) planes.push_back({1, 2});
  std::vector<ComparisonRow> rows;
  for (const auto& plane : planes) {
    ExperimentConfig c = cfg;
    c.projection.plane = plane;
    rows.push_back({"cnn_" + c.projection.plane_name(), train_and_evaluate(dataset, split, "cnn", c).metrics.test_accuracy});
  }
  rows.push_back({"pointnet", train_and_evaluate(dataset, split, "pointnet", cfg).metrics.test_accuracy});
  rows.push_back({"dgcnn", train_and_evaluate(dataset, split, "dgcnn", cfg).metrics.test_accuracy});
  return rows;
}

std::string comparison_csv(const std::vector<ComparisonRow>& rows) {
  std::string out = "model,accuracy\n";
  for (const auto& r : rows) out += r.model + "," + format6(r.accuracy) + "\n";
  return out;
}

}  // namespace fempc::train
