#pragma once

// Command-line front-end. Flags map onto the option structs in commands.hpp;
// unset training flags stay unset so config-file and preset values survive.

#include <CLI11.hpp>

#include <iostream>
#include <string>
#include <vector>

#include "hipseg/cli/commands.hpp"

namespace hipseg::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitError = 2;
inline constexpr int kExitDiverged = 3;

namespace detail {

template <typename T>
void optional_flag(CLI::App* app, const std::string& name, std::optional<T>& target, const std::string& help) {
  app->add_option_function<T>(name, [&target](const T& v) { target = v; }, help);
}

inline void add_train_overrides(CLI::App* app, TrainOverrides& o) {
  optional_flag(app, "--optimizer", o.optimizer, "sgd | adam | radam");
  optional_flag(app, "--loss", o.loss, "dice | gdl | boundary");
  optional_flag(app, "--head", o.head, "sigmoid-1ch | softmax-2ch");
  optional_flag(app, "--negative-scope", o.negative_scope, "hippocampus-slices | whole-brain");
  optional_flag(app, "--lr", o.lr, "initial learning rate");
  optional_flag(app, "--lr-factor", o.lr_factor, "step decay factor");
  optional_flag(app, "--lr-step-epoch", o.lr_step_epoch, "epoch (0-based) where the decay applies");
  optional_flag(app, "--positive-fraction", o.positive_fraction, "fraction of patches centred on the target border");
  optional_flag(app, "--threshold", o.threshold, "validation threshold");
  optional_flag(app, "--max-epochs", o.max_epochs, "epoch limit");
  optional_flag(app, "--patience", o.patience, "early-stopping patience");
  optional_flag(app, "--batch-size", o.batch_size, "patches per step");
  optional_flag(app, "--depth", o.depth, "number of downsamplings");
  optional_flag(app, "--base-width", o.base_width, "channels at the first level");
  optional_flag(app, "--alpha-horizon", o.alpha_horizon, "epochs for the boundary weight to reach 0 (0 = max epochs)");
  optional_flag(app, "--seed", o.seed, "master seed");
  app->add_option_function<std::vector<int>>(
         "--epoch-sizes", [&o](const std::vector<int>& v) { o.epoch_sizes = std::array<int, 3>{v[0], v[1], v[2]}; },
         "patches per epoch: sagittal coronal axial")
      ->expected(3);
  app->add_option_function<std::vector<int>>(
         "--patch-size", [&o](const std::vector<int>& v) { o.patch_size = std::array<int, 2>{v[0], v[1]}; },
         "patch rows cols")
      ->expected(2);
  app->add_flag_function("--no-augment", [&o](std::int64_t) { o.augment = false; }, "disable augmentation");
}

inline void print_dir(const fs::path& dir) { std::cout << dir.string() << '\n'; }

}  // namespace detail

inline int run_cli(int argc, char** argv) {
  CLI::App app{"Multi-view 2D hippocampus segmentation on synthetic phantoms"};
  app.require_subcommand(1);

  std::optional<std::string> out_str;
  auto out_path = [&]() -> std::optional<fs::path> {
    if (out_str) return fs::path(*out_str);
    return std::nullopt;
  };

  // synth
  SynthOptions synth;
  std::string cohorts = "control";
  std::vector<int> shape{64, 64, 64};
  std::vector<double> fractions{0.8, 0.1, 0.1};
  auto* s = app.add_subcommand("synth", "generate a phantom dataset");
  s->add_option("--count", synth.count, "number of volumes")->capture_default_str();
  s->add_option("--seed", synth.seed, "generator seed")->capture_default_str();
  s->add_option("--cohorts", cohorts, "comma-separated cohorts, assigned round-robin")->capture_default_str();
  s->add_option("--shape", shape, "extent X Y Z")->expected(3)->capture_default_str();
  s->add_option("--noise-sigma", synth.noise_sigma, "additive Gaussian noise")->capture_default_str();
  s->add_option("--split", fractions, "train validation test fractions")->expected(3)->capture_default_str();
  detail::optional_flag(s, "--split-seed", synth.split_seed, "split seed (defaults to --seed)");
  s->add_option("--format", synth.format, "nii.gz | nii | raw")->capture_default_str();
  detail::optional_flag(s, "--out", out_str, "output directory");

  // train
  TrainOptions train;
  std::string dataset;
  std::optional<std::string> config_file;
  std::vector<std::string> presets;
  auto* t = app.add_subcommand("train", "train the three orientation networks");
  t->add_option("--dataset", dataset, "dataset directory or manifest")->required();
  t->add_option("--preset", presets, "paper | desk | best | table-s1-row1..6 (repeatable, applied in order)");
  detail::optional_flag(t, "--config", config_file, "JSON training config");
  t->add_option("--workers", train.workers, "parallel orientation trainings")->capture_default_str();
  t->add_flag("--quiet", train.quiet, "no per-epoch progress");
  detail::optional_flag(t, "--out", out_str, "output directory");
  detail::add_train_overrides(t, train.overrides);

  // predict
  PredictOptions predict;
  std::string checkpoints;
  std::vector<std::string> inputs;
  auto* p = app.add_subcommand("predict", "segment volumes with a trained ensemble");
  p->add_option("--checkpoints", checkpoints, "directory with sagittal/coronal/axial .ckpt")->required();
  p->add_option("inputs", inputs, "volume files or directories")->required();
  p->add_option("--threshold", predict.threshold, "consensus threshold")->capture_default_str();
  p->add_option("--keep", predict.keep, "largest components kept")->capture_default_str();
  p->add_option("--connectivity", predict.connectivity, "6 | 26")->capture_default_str();
  p->add_flag("--assume-canonical", predict.assume_canonical, "treat volumes without orientation metadata as RAS");
  p->add_flag("--save-activations", predict.save_activations, "also write per-orientation and consensus activations");
  detail::optional_flag(p, "--out", out_str, "output directory");

  // evaluate
  EvaluateOptions evaluate;
  std::string predictions, matrix;
  auto* e = app.add_subcommand("evaluate", "score predicted masks against ground truth");
  e->add_option("--predictions", predictions, "directory of <id>_mask files");
  e->add_option("--dataset", dataset, "ground-truth dataset");
  e->add_option("--split", evaluate.split, "split to score (empty = all)")->capture_default_str();
  e->add_option("--matrix", matrix, "JSON list of trained-on/tested-on cells");
  detail::optional_flag(e, "--out", out_str, "output directory");

  // ablate
  AblateOptions ablate;
  auto* a = app.add_subcommand("ablate", "optimizer / learning-rate / loss grid");
  a->add_option("--dataset", dataset, "dataset directory or manifest")->required();
  a->add_option("--preset", ablate.presets, "scale presets applied to every row")->capture_default_str();
  a->add_option("--rows", ablate.rows, "grid rows (table-s1-row1..6); default all");
  detail::optional_flag(a, "--config", config_file, "JSON training config");
  a->add_option("--workers", ablate.workers, "parallel orientation trainings")->capture_default_str();
  detail::optional_flag(a, "--out", out_str, "output directory");
  detail::add_train_overrides(a, ablate.overrides);

  // consensus-report
  ConsensusReportOptions consensus;
  auto* c = app.add_subcommand("consensus-report", "consensus against single-orientation arms");
  c->add_option("--checkpoints", checkpoints, "directory with sagittal/coronal/axial .ckpt")->required();
  c->add_option("--dataset", dataset, "dataset directory or manifest")->required();
  c->add_option("--split", consensus.split, "split to score")->capture_default_str();
  c->add_option("--threshold", consensus.threshold, "consensus threshold")->capture_default_str();
  detail::optional_flag(c, "--out", out_str, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    return app.exit(err);
  }

  try {
    if (s->parsed()) {
      synth.out = out_path();
      synth.cohorts = split_list(cohorts);
      synth.shape = {shape[0], shape[1], shape[2]};
      synth.fractions = {fractions[0], fractions[1], fractions[2]};
      detail::print_dir(cmd_synth(synth).dir);
      return kExitOk;
    }
    if (t->parsed()) {
      train.dataset = dataset;
      train.out = out_path();
      train.presets = presets;
      if (config_file) train.config_file = fs::path(*config_file);
      const TrainResult r = cmd_train(train);
      detail::print_dir(r.dir);
      if (r.exit_code != kExitOk) {
        for (const auto& run : r.outcome.runs) {
          if (run.failed()) std::cerr << "error: " << run.report.orientation << " training diverged: " << run.report.diagnostic << '\n';
        }
        std::cerr << "partial artifacts kept in " << r.dir.string() << '\n';
      }
      return r.exit_code;
    }
    if (p->parsed()) {
      predict.checkpoints = checkpoints;
      predict.out = out_path();
      for (const auto& in : inputs) predict.inputs.emplace_back(in);
      detail::print_dir(cmd_predict(predict).dir);
      return kExitOk;
    }
    if (e->parsed()) {
      evaluate.out = out_path();
      if (!matrix.empty()) {
        evaluate.matrix = fs::path(matrix);
      } else {
        if (predictions.empty() || dataset.empty()) throw CommandError("evaluate needs --predictions and --dataset, or --matrix");
        evaluate.predictions = predictions;
        evaluate.dataset = dataset;
      }
      const EvaluateResult r = cmd_evaluate(evaluate);
      if (r.matrix.empty()) std::cout << summary_table(r.summary);
      else std::cout << matrix_csv(r.matrix);
      detail::print_dir(r.dir);
      return kExitOk;
    }
    if (a->parsed()) {
      ablate.dataset = dataset;
      ablate.out = out_path();
      if (config_file) ablate.config_file = fs::path(*config_file);
      const AblateResult r = cmd_ablate(ablate);
      std::cout << grid_table_csv(r.results);
      detail::print_dir(r.dir);
      return kExitOk;
    }
    if (c->parsed()) {
      consensus.checkpoints = checkpoints;
      consensus.dataset = dataset;
      consensus.out = out_path();
      const ConsensusReportResult r = cmd_consensus_report(consensus);
      std::cout << arms_summary_csv(r.report);
      detail::print_dir(r.dir);
      return kExitOk;
    }
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << '\n';
    return kExitError;
  }
  return kExitError;
}

}  // namespace hipseg::cli
