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

// fempc: generate synthetic pressure-field point clouds, train and evaluate
// PointNet, DGCNN and projection-CNN classifiers, sweep K, compare models.

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "fempc/dataset_io.hpp"
#include "fempc/error.hpp"
#include "fempc/synth.hpp"
#include "fempc/train/experiment.hpp"
#include "fempc/train/gradcheck.hpp"
#include "fempc/train/run_config.hpp"

namespace fs = std::filesystem;
using namespace fempc;

namespace {

enum Exit { kOk = 0, kInput = 1, kIo = 2, kNumerical = 3, kGradient = 4 };

// Failure reading something the user pointed us at; reported as exit 1.
struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct Options {
  std::string config_path;
  std::uint64_t seed = 42;
  bool seed_given = false;
  std::string out;
};

using Resolved = train::RunConfig;

Resolved resolve(const Options& opt, KeyValues overrides = {}) {
  KeyValues kv;
  if (!opt.config_path.empty()) {
    try {
      kv = read_key_values(opt.config_path);
    } catch (const IoError& e) {
      throw InputError(e.what());
    }
  }
  for (auto& [k, v] : overrides) kv[k] = v;
  if (opt.seed_given) kv["seed"] = std::to_string(opt.seed);
  return train::resolve_run_config(kv);
}

void announce(const Resolved& r) { std::printf("config digest: %s\n", r.digest().c_str()); }

fs::path out_dir(const Options& opt, const char* fallback) {
  fs::path dir = opt.out.empty() ? fs::path(fallback) : fs::path(opt.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  return dir;
}

void write_resolved(const Resolved& r, const fs::path& dir) {
  write_file_atomic(dir / "config.txt", render_key_values(r.all));
}

Dataset load_dataset(const std::string& dir) {
  if (dir.empty()) throw InvalidArgument("--data <dir> is required");
  try {
    return read_dataset(dir);
  } catch (const IoError& e) {
    throw InputError(e.what());
  }
}

void print_confusion(const train::Confusion& c) {
  std::printf("test accuracy: %s (%d/%d)\n", format6(c.accuracy()).c_str(), c.tp + c.tn, c.total());
  std::printf("confusion: tp=%d tn=%d fp=%d fn=%d\n", c.tp, c.tn, c.fp, c.fn);
}

int cmd_gen(const Options& opt) {
  const Resolved r = resolve(opt);
  announce(r);
  const Dataset ds = synth::generate_dataset(r.gen);
  const fs::path dir = out_dir(opt, "data");
  write_dataset(ds, dir);
  int positive = 0;
  for (const auto& s : ds.samples) positive += s.label.class_id;
  std::printf("wrote %zu samples to %s\n", ds.size(), dir.string().c_str());
  std::printf("class balance: %zu/%d (low/high)\n", ds.size() - positive, positive);
  std::printf("label threshold: %s\n", ds.metadata.at("label_threshold").c_str());
  return kOk;
}

int cmd_train(const Options& opt, const std::string& model, const std::string& data, int k) {
  KeyValues over;
  if (k > 0) over["dgcnn.k_neighbors"] = std::to_string(k);
  const Resolved r = resolve(opt, over);
  announce(r);
  const Dataset ds = load_dataset(data);
  auto run = train::train_and_evaluate(ds, model, r.exp);
  const fs::path dir = out_dir(opt, "run");
  train::save_model(run, dir / "model.ckpt");
  write_file_atomic(dir / "metrics.csv", train::metrics_csv(run.metrics));
  write_resolved(r, dir);
  const auto& loss = run.metrics.epoch_loss;
  std::printf("model: %s, %s trainable parameters\n", model.c_str(),
              std::to_string(nn::count_trainable(run.tensors())).c_str());
  std::printf("final epoch mean loss: %s\n", format6(loss.back()).c_str());
  print_confusion(run.metrics.confusion);
  std::printf("training time: %.1f s\n", run.metrics.wall_seconds);
  return kOk;
}

int cmd_eval(const std::string& checkpoint, const std::string& data, bool all) {
  if (checkpoint.empty()) throw InvalidArgument("--checkpoint <file> is required");
  train::ModelRun run;
  try {
    run = train::load_model(checkpoint);
  } catch (const IoError& e) {
    throw InputError(e.what());
  }
  const Dataset ds = load_dataset(data);
  std::printf("model: %s\n", run.model_type.c_str());
  std::printf("config digest: %s\n", digest_hex(render_key_values(run.header)).c_str());
  print_confusion(train::evaluate_model(run, ds, all));
  return kOk;
}

int cmd_sweep(const Options& opt, const std::string& data, const std::string& k_list) {
  const Resolved r = resolve(opt);
  announce(r);
  const auto ks = parse_int_list("--k", k_list);
  const Dataset ds = load_dataset(data);
  const auto rows = train::k_sweep(ds, ks, r.exp);
  const std::string csv = train::sweep_csv(rows);
  const fs::path dir = out_dir(opt, "sweep");
  write_file_atomic(dir / "sweep.csv", csv);
  write_resolved(r, dir);
  std::fputs(csv.c_str(), stdout);
  const train::SweepRow* best = &rows.front();
  for (const auto& row : rows) best = row.accuracy > best->accuracy ? &row : best;
  std::printf("best K: %d (accuracy %s)\n", best->k, format6(best->accuracy).c_str());
  return kOk;
}

int cmd_compare(const Options& opt, const std::string& data) {
  const Resolved r = resolve(opt);
  announce(r);
  const Dataset ds = load_dataset(data);
  const std::string csv = train::comparison_csv(train::model_comparison(ds, r.exp));
  const fs::path dir = out_dir(opt, "compare");
  write_file_atomic(dir / "comparison.csv", csv);
  write_resolved(r, dir);
  std::fputs(csv.c_str(), stdout);
  return kOk;
}

int cmd_gradcheck(const Options& opt, train::GradCheckSetup setup, const std::string& mode) {
  if (opt.seed_given) setup.seed = opt.seed;
  if (mode == "train") setup.mode = Mode::kTrain;
  else if (mode != "eval") throw InvalidArgument("--mode must be eval or train");
  const auto r = train::run_model_gradcheck(setup);
  std::printf("model: %s, coordinates checked: %zu\n", setup.model.c_str(), r.result.coords_checked);
  std::printf("max relative error: %.3e (threshold %.0e)\n", r.result.max_rel_error, r.threshold);
  std::printf("worst: %s[%zu] analytic %.6e numeric %.6e\n", r.result.worst_tensor.c_str(), r.result.worst_index,
              r.result.worst_analytic, r.result.worst_numeric);
  std::printf("time: %.2f s\n", r.seconds);
  if (!r.passed()) {
    std::fprintf(stderr, "gradient check FAILED\n");
    return kGradient;
  }
  std::printf("gradient check passed\n");
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  retain_freed_memory();
  CLI::App app{"fempc: point-cloud classifiers for FEM pressure fields"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand
  Options opt;
  app.add_option("--config", opt.config_path, "flat key = value config file");
  auto* seed_opt = app.add_option("--seed", opt.seed, "master seed");
  app.add_option("--out", opt.out, "output directory");

  std::string model = "dgcnn", data, checkpoint, k_list = "5,10,15,20,30";
  int k = 0;
  bool all = false;
  train::GradCheckSetup gc;
  std::string gc_mode = "eval";

  auto* gen = app.add_subcommand("gen", "generate a synthetic dataset");
  auto* trn = app.add_subcommand("train", "train one model and evaluate it on the test split");
  trn->add_option("--model", model, "pointnet | dgcnn | cnn")->check(CLI::IsMember({"pointnet", "dgcnn", "cnn"}));
  trn->add_option("--data", data, "dataset directory");
  trn->add_option("--k", k, "DGCNN neighbor count");
  auto* evl = app.add_subcommand("eval", "evaluate a checkpoint on its recorded test split");
  evl->add_option("--checkpoint", checkpoint, "model.ckpt from train");
  evl->add_option("--data", data, "dataset directory");
  evl->add_flag("--all", all, "evaluate every sample instead of the test split");
  auto* swp = app.add_subcommand("sweep", "train a fresh DGCNN per K");
  swp->add_option("--data", data, "dataset directory");
  swp->add_option("--k", k_list, "comma-separated K values");
  auto* cmp = app.add_subcommand("compare", "CNN projections, PointNet and DGCNN on one split");
  cmp->add_option("--data", data, "dataset directory");
  auto* grd = app.add_subcommand("gradcheck", "finite-difference check of a model's backward pass");
  grd->add_option("--model", gc.model, "linear | pointnet | dgcnn | cnn");
  grd->add_option("--n", gc.n_points, "points per cloud");
  grd->add_option("--k", gc.k_neighbors, "DGCNN neighbor count");
  grd->add_option("--resolution", gc.resolution, "CNN image side");
  grd->add_option("--mode", gc_mode, "batch-norm mode: eval | train");
  grd->add_flag("--corrupt-backward", gc.corrupt_backward, "negative control: skew the analytic gradients");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kInput;
  }
  opt.seed_given = seed_opt->count() > 0;

  try {
    if (gen->parsed()) return cmd_gen(opt);
    if (trn->parsed()) return cmd_train(opt, model, data, k);
    if (evl->parsed()) return cmd_eval(checkpoint, data, all);
    if (swp->parsed()) return cmd_sweep(opt, data, k_list);
    if (cmp->parsed()) return cmd_compare(opt, data);
    if (grd->parsed()) return cmd_gradcheck(opt, gc, gc_mode);
  } catch (const InvalidArgument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInput;
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kInput;
  } catch (const IoError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  } catch (const NumericalError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kNumerical;
  } catch (const std::filesystem::filesystem_error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kIo;
  }
  return kInput;
}
