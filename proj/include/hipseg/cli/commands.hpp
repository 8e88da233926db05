#pragma once

// Subcommand implementations. Each command resolves its configuration,
// writes all outputs under one run directory and records a run manifest.
// Errors surface as CommandError; the front-end maps them to exit codes.

#include <zlib.h>

#include <array>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/io/dataset.hpp"
#include "hipseg/io/png_plot.hpp"
#include "hipseg/metrics/report.hpp"
#include "hipseg/phantoms/phantoms.hpp"
#include "hipseg/phantoms/split.hpp"
#include "hipseg/training/trainer.hpp"

namespace hipseg::cli {

namespace fs = std::filesystem;
using nlohmann::json;

struct CommandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline constexpr const char* kRunRootEnv = "HIPSEG_RUN_ROOT";
inline constexpr const char* kRunManifestName = "run_manifest.json";

inline std::string timestamp(const char* fmt = "%Y%m%d-%H%M%S") {
  const std::time_t t = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream os;
  os << std::put_time(&tm, fmt);
  return os.str();
}

inline std::string file_crc32(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::vector<char> buf(1 << 16);
  uLong crc = crc32(0L, Z_NULL, 0);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    const auto n = in.gcount();
    if (n > 0) crc = crc32(crc, reinterpret_cast<const Bytef*>(buf.data()), static_cast<uInt>(n));
  }
  std::ostringstream os;
  os << "crc32:" << std::hex << std::setw(8) << std::setfill('0') << crc;
  return os.str();
}

// Explicit --out wins; otherwise <root>/<timestamp>-s<seed>-<command>, root
// from HIPSEG_RUN_ROOT or ./runs.
inline fs::path resolve_run_dir(const std::optional<fs::path>& out, const std::string& command, std::uint64_t seed) {
  fs::path dir;
  if (out) {
    dir = *out;
  } else {
    const char* env = std::getenv(kRunRootEnv);
    const fs::path root = env && *env ? fs::path(env) : fs::path("runs");
    const std::string base = timestamp() + "-s" + std::to_string(seed) + "-" + command;
    dir = root / base;
    for (int k = 2; fs::exists(dir); ++k) dir = root / (base + "-" + std::to_string(k));
  }
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw CommandError("cannot create output directory " + dir.string());
  const fs::path probe = dir / ".write-test";
  {
    std::ofstream t(probe);
    if (!t) throw CommandError("output directory is not writable: " + dir.string());
  }
  fs::remove(probe, ec);
  return dir;
}

class RunManifest {
 public:
  RunManifest(std::string command, fs::path dir) : dir_(std::move(dir)) {
    j_["command"] = std::move(command);
    j_["started"] = timestamp("%Y-%m-%dT%H:%M:%SZ");
    j_["run_dir"] = fs::absolute(dir_).string();
    j_["inputs"] = json::object();
    j_["outputs"] = json::array();
    j_["seeds"] = json::object();
  }
  RunManifest(const RunManifest&) = delete;
  RunManifest& operator=(const RunManifest&) = delete;
  // A command that throws after creating its directory still leaves a manifest.
  ~RunManifest() {
    if (finished_) return;
    try {
      j_["aborted"] = true;
      finish(2);
    } catch (...) {
    }
  }

  json& operator[](const std::string& key) { return j_[key]; }
  const fs::path& dir() const noexcept { return dir_; }
  fs::path path(const std::string& name) const { return dir_ / name; }

  void output(const fs::path& p) { outputs_.push_back(p); }

  void write_text(const std::string& name, const std::string& text) {
    std::ofstream out(path(name));
    if (!out) throw CommandError("cannot write " + path(name).string());
    out << text;
    output(path(name));
  }
  void write_json(const std::string& name, const json& value) { write_text(name, value.dump(2) + "\n"); }

  void finish(int exit_code) {
    finished_ = true;
    j_["finished"] = timestamp("%Y-%m-%dT%H:%M:%SZ");
    j_["exit_code"] = exit_code;
    json outs = json::array();
    for (const auto& p : outputs_) {
      if (!fs::exists(p)) continue;
      outs.push_back({{"path", fs::relative(p, dir_).generic_string()}, {"hash", file_crc32(p)}});
    }
    j_["outputs"] = outs;
    std::ofstream out(dir_ / kRunManifestName);
    out << j_.dump(2) << '\n';
  }

 private:
  fs::path dir_;
  json j_;
  std::vector<fs::path> outputs_;
  bool finished_ = false;
};

inline std::vector<std::string> split_list(const std::string& s, char sep = ',') {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(s);
  while (std::getline(is, cur, sep)) {
    if (!cur.empty()) out.push_back(cur);
  }
  return out;
}

// ---------------------------------------------------------------- synth

struct SynthOptions {
  std::optional<fs::path> out;
  int count = 30;
  std::uint64_t seed = 1;
  std::vector<std::string> cohorts{"control"};
  Extent3 shape{64, 64, 64};
  double noise_sigma = 0.02;
  std::array<double, 3> fractions{0.8, 0.1, 0.1};
  std::optional<std::uint64_t> split_seed;
  std::string format = "nii.gz";  // nii.gz, nii, raw
};

struct SynthResult {
  fs::path dir;
  io::DatasetManifest manifest;
};

inline SynthResult cmd_synth(const SynthOptions& o) {
  if (o.count < 1) throw CommandError("--count must be >= 1");
  if (o.cohorts.empty()) throw CommandError("--cohorts must name at least one cohort");
  if (o.format != "nii.gz" && o.format != "nii" && o.format != "raw") throw CommandError("--format must be nii.gz, nii or raw");
  std::vector<Cohort> cohorts;
  for (const auto& c : o.cohorts) cohorts.push_back(parse_cohort(c));
  for (int d : o.shape) {
    if (d < kMinPhantomExtent) {
      throw CommandError("invalid phantom shape " + to_string(o.shape) + ": every extent must be >= " +
                         std::to_string(kMinPhantomExtent));
    }
  }
  const fs::path dir = resolve_run_dir(o.out, "synth", o.seed);
  RunManifest run("synth", dir);
  fs::create_directories(dir / "images");
  fs::create_directories(dir / "masks");

  io::DatasetManifest m;
  m.root = dir;
  std::vector<std::string> tags;
  const std::string ext = "." + o.format;
  for (int i = 0; i < o.count; ++i) {
    const std::size_t k = static_cast<std::size_t>(i) % cohorts.size();
    PhantomSpec spec;
    spec.seed = o.seed;
    spec.shape = o.shape;
    spec.cohort = cohorts[k];
    spec.noise_sigma = o.noise_sigma;
    const Phantom ph = generate_one(spec, i / static_cast<int>(cohorts.size()));
    const std::string vol_rel = "images/" + ph.sample.id + ext;
    const std::string mask_rel = "masks/" + ph.sample.id + ext;
    if (o.format == "raw") {
      raw::write(dir / vol_rel, ph.sample.volume);
      raw::write_mask(dir / mask_rel, ph.sample.mask, ph.sample.volume.spacing, ph.sample.volume.axes);
      run.output(dir / vol_rel);
      run.output(dir / mask_rel);
      run.output(raw::sidecar_path(dir / vol_rel));
      run.output(raw::sidecar_path(dir / mask_rel));
    } else {
      const nifti::Header h = nifti::make_header(o.shape, ph.sample.volume.spacing, ph.sample.volume.axes);
      nifti::write_float((dir / vol_rel).string(), ph.sample.volume.data, h);
      nifti::write_mask((dir / mask_rel).string(), ph.sample.mask, h);
      run.output(dir / vol_rel);
      run.output(dir / mask_rel);
    }
    m.items.push_back({ph.sample.id, ph.sample.cohort, vol_rel, mask_rel, ""});
    tags.push_back(ph.sample.cohort);
  }
  const std::uint64_t split_seed = o.split_seed.value_or(o.seed);
  try {
    const HoldoutSplit split = split_holdout(tags, o.fractions, split_seed);
    for (auto i : split.train) m.items[i].split = "train";
    for (auto i : split.validation) m.items[i].split = "validation";
    for (auto i : split.test) m.items[i].split = "test";
  } catch (const std::invalid_argument& e) {
    throw CommandError(std::string("cannot split dataset: ") + e.what());
  }
  m.extra["generator"] = {{"seed", o.seed},     {"count", o.count},           {"cohorts", o.cohorts},
                          {"shape", o.shape},   {"noise_sigma", o.noise_sigma}, {"format", o.format}};
  m.extra["split"] = {{"fractions", o.fractions}, {"seed", split_seed}};
  io::write_manifest(m);
  run.output(dir / io::kManifestName);

  run["config"] = m.extra;
  run["seeds"] = {{"phantoms", o.seed}, {"split", split_seed}};
  run.finish(0);
  return {dir, m};
}

// ---------------------------------------------------------------- train

struct TrainOverrides {
  std::optional<std::string> optimizer, loss, head, negative_scope;
  std::optional<double> lr, lr_factor, positive_fraction, threshold;
  std::optional<int> lr_step_epoch, max_epochs, patience, batch_size, depth, base_width, alpha_horizon;
  std::optional<std::array<int, 3>> epoch_sizes;
  std::optional<std::array<int, 2>> patch_size;
  std::optional<bool> augment;
  std::optional<std::uint64_t> seed;
};

// defaults < presets (in order) < config file < command-line flags
inline TrainConfig resolve_train_config(const std::vector<std::string>& presets, const std::optional<fs::path>& config_file,
                                        const TrainOverrides& cli, json* sources = nullptr) {
  TrainConfig c;
  json src = {{"presets", presets}};
  for (const auto& p : presets) {
    try {
      apply_preset(c, p);
    } catch (const std::invalid_argument& e) {
      throw CommandError(e.what());
    }
  }
  if (config_file) {
    std::ifstream in(*config_file);
    if (!in) throw CommandError("cannot read config file " + config_file->string());
    try {
      apply_json(c, json::parse(in));
    } catch (const std::exception& e) {
      throw CommandError("invalid config file " + config_file->string() + ": " + e.what());
    }
    src["config_file"] = config_file->string();
  }
  json flags = json::object();
  try {
    if (cli.optimizer) c.optimizer = parse_optimizer(*cli.optimizer), flags["optimizer"] = *cli.optimizer;
    if (cli.loss) c.loss = parse_loss(*cli.loss), flags["loss"] = *cli.loss;
    if (cli.head) c.network.head = nn::parse_head(*cli.head), flags["head"] = *cli.head;
    if (cli.negative_scope) apply_json(c, {{"negative_scope", *cli.negative_scope}}), flags["negative_scope"] = *cli.negative_scope;
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  if (cli.lr) c.initial_lr = *cli.lr, flags["lr"] = *cli.lr;
  if (cli.lr_factor) c.lr_factor = *cli.lr_factor, flags["lr_factor"] = *cli.lr_factor;
  if (cli.positive_fraction) c.sampler.positive_fraction = *cli.positive_fraction, flags["positive_fraction"] = *cli.positive_fraction;
  if (cli.threshold) c.threshold = *cli.threshold, flags["threshold"] = *cli.threshold;
  if (cli.lr_step_epoch) c.lr_step_epoch = *cli.lr_step_epoch, flags["lr_step_epoch"] = *cli.lr_step_epoch;
  if (cli.max_epochs) c.max_epochs = *cli.max_epochs, flags["max_epochs"] = *cli.max_epochs;
  if (cli.patience) c.patience = *cli.patience, flags["patience"] = *cli.patience;
  if (cli.batch_size) c.batch_size = *cli.batch_size, flags["batch_size"] = *cli.batch_size;
  if (cli.depth) c.network.depth = *cli.depth, flags["depth"] = *cli.depth;
  if (cli.base_width) c.network.base_width = *cli.base_width, flags["base_width"] = *cli.base_width;
  if (cli.alpha_horizon) c.alpha_horizon = *cli.alpha_horizon, flags["alpha_horizon"] = *cli.alpha_horizon;
  if (cli.epoch_sizes) c.epoch_sizes = *cli.epoch_sizes, flags["epoch_sizes"] = *cli.epoch_sizes;
  if (cli.patch_size) {
    c.sampler.patch_rows = (*cli.patch_size)[0];
    c.sampler.patch_cols = (*cli.patch_size)[1];
    flags["patch_size"] = *cli.patch_size;
  }
  if (cli.augment) c.sampler.augment.enabled = *cli.augment, flags["augment"] = *cli.augment;
  if (cli.seed) c.seed = *cli.seed, flags["seed"] = *cli.seed;
  src["flags"] = flags;
  try {
    require_valid(c);
  } catch (const std::invalid_argument& e) {
    throw CommandError(std::string("invalid training configuration: ") + e.what());
  }
  if (sources) *sources = src;
  return c;
}

inline std::string checkpoint_name(Orientation o) { return std::string(name_of(o)) + ".ckpt"; }

struct TrainOptions {
  fs::path dataset;
  std::optional<fs::path> out;
  std::optional<fs::path> config_file;
  std::vector<std::string> presets;
  TrainOverrides overrides;
  int workers = 1;
  bool quiet = false;
};

struct TrainResult {
  fs::path dir;
  TrainConfig config;
  EnsembleOutcome outcome;
  int exit_code = 0;
};

inline void plot_curves(const fs::path& path, const TrainReport& r) {
  std::vector<double> tr, va;
  for (const auto& e : r.epochs) {
    tr.push_back(e.train_dice);
    va.push_back(e.val_dice);
  }
  plot::line_plot(path.string(), {tr, va});
}

inline void write_train_artifacts(RunManifest& run, const EnsembleOutcome& outcome, const std::string& prefix = "") {
  json summary = json::array();
  for (Orientation o : kOrientations) {
    const auto& r = outcome.runs[static_cast<std::size_t>(o)];
    const std::string name = prefix + std::string(name_of(o));
    if (r.checkpoint) {
      nn::save_checkpoint(*r.checkpoint, run.path(prefix + checkpoint_name(o)));
      run.output(run.path(prefix + checkpoint_name(o)));
    }
    run.write_json(name + "_report.json", to_json(r.report));
    run.write_text(name + "_curves.csv", curves_csv(r.report));
    if (!r.report.epochs.empty()) {
      plot_curves(run.path(name + "_curves.png"), r.report);
      run.output(run.path(name + "_curves.png"));
    }
    summary.push_back({{"orientation", name_of(o)},
                       {"best_epoch", r.report.best_epoch},
                       {"best_val_dice", r.report.best_val_dice},
                       {"stop_reason", name_of(r.report.stop_reason)},
                       {"diagnostic", r.report.diagnostic}});
  }
  run["training"] = summary;
}

inline TrainResult cmd_train(const TrainOptions& o) {
  json sources;
  const TrainConfig config = resolve_train_config(o.presets, o.config_file, o.overrides, &sources);
  io::DatasetManifest m;
  try {
    m = io::read_manifest(o.dataset);
  } catch (const std::exception& e) {
    throw CommandError(std::string("missing dataset: ") + e.what());
  }
  const auto train = io::load_split(m, "train");
  const auto val = io::load_split(m, "validation");
  if (train.empty()) throw CommandError("dataset " + o.dataset.string() + " has no training items");
  if (val.empty()) throw CommandError("dataset " + o.dataset.string() + " has no validation items");

  TrainResult res;
  res.config = config;
  res.dir = resolve_run_dir(o.out, "train", config.seed);
  RunManifest run("train", res.dir);
  run["inputs"] = {{"dataset", fs::absolute(o.dataset).string()}, {"train", train.size()}, {"validation", val.size()}};
  run["config"] = to_json(config);
  run["config_sources"] = sources;
  run["workers"] = o.workers;
  json seeds = {{"master", config.seed}};
  for (Orientation oo : kOrientations) seeds[std::string(name_of(oo))] = orientation_seed(config.seed, oo);
  run["seeds"] = seeds;

  ProgressFn progress;
  if (!o.quiet) {
    progress = [](Orientation oo, const EpochRecord& r) {
      std::cerr << name_of(oo) << " epoch " << r.epoch << " lr " << r.lr << " loss " << r.train_loss << " train "
                << r.train_dice << " val " << r.val_dice << '\n';
    };
  }
  res.outcome = train_ensemble(train, val, config, o.workers, progress);
  write_train_artifacts(run, res.outcome);
  res.exit_code = res.outcome.failed() ? 3 : 0;
  run.finish(res.exit_code);
  return res;
}

// ---------------------------------------------------------------- predict

struct PredictOptions {
  fs::path checkpoints;               // directory holding sagittal/coronal/axial .ckpt
  std::vector<fs::path> inputs;       // files or directories
  std::optional<fs::path> out;
  double threshold = 0.5;
  int keep = 2;
  int connectivity = 26;
  bool assume_canonical = false;
  bool save_activations = false;
};

struct PredictResult {
  fs::path dir;
  std::vector<fs::path> masks;
};

inline Ensemble load_ensemble(const fs::path& dir) {
  Ensemble e;
  for (Orientation o : kOrientations) {
    const fs::path p = dir / checkpoint_name(o);
    if (!fs::exists(p)) throw CommandError("missing checkpoint " + p.string());
    try {
      e[o] = nn::load_network(nn::load_checkpoint(p));
    } catch (const std::exception& ex) {
      throw CommandError(ex.what());
    }
  }
  return e;
}

inline std::vector<fs::path> expand_inputs(const std::vector<fs::path>& inputs) {
  std::vector<fs::path> files;
  for (const auto& in : inputs) {
    if (fs::is_directory(in)) {
      std::vector<fs::path> found;
      for (const auto& entry : fs::directory_iterator(in))
        if (entry.is_regular_file() && io::is_volume_file(entry.path())) found.push_back(entry.path());
      std::sort(found.begin(), found.end());
      files.insert(files.end(), found.begin(), found.end());
    } else if (fs::exists(in)) {
      files.push_back(in);
    } else {
      throw CommandError("no such input: " + in.string());
    }
  }
  if (files.empty()) throw CommandError("no input volumes found");
  return files;
}

inline std::string output_extension(const fs::path& input) {
  const std::string s = input.filename().string();
  if (s.size() > 7 && s.substr(s.size() - 7) == ".nii.gz") return ".nii.gz";
  return input.extension().string();
}

inline PredictResult cmd_predict(const PredictOptions& o) {
  if (!(o.threshold > 0.0 && o.threshold < 1.0)) throw CommandError("--threshold must be in (0, 1)");
  if (o.keep < 1) throw CommandError("--keep must be >= 1");
  PostprocessConfig pp;
  pp.threshold = o.threshold;
  pp.keep = static_cast<std::size_t>(o.keep);
  try {
    pp.connectivity = parse_connectivity(o.connectivity);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  Ensemble ensemble = load_ensemble(o.checkpoints);
  const auto files = expand_inputs(o.inputs);

  PredictResult res;
  res.dir = resolve_run_dir(o.out, "predict", 0);
  RunManifest run("predict", res.dir);
  json inputs = json::array();
  for (const auto& f : files) inputs.push_back({{"path", fs::absolute(f).string()}, {"hash", file_crc32(f)}});
  run["inputs"] = {{"checkpoints", fs::absolute(o.checkpoints).string()}, {"volumes", inputs}};
  run["config"] = {{"threshold", o.threshold},
                   {"keep", o.keep},
                   {"connectivity", o.connectivity},
                   {"assume_canonical", o.assume_canonical},
                   {"save_activations", o.save_activations}};

  for (const auto& f : files) {
    io::LoadedVolume lv = io::load_volume(f);
    if (!lv.volume.axes) {
      if (!o.assume_canonical) {
        throw CommandError("missing orientation metadata in " + f.string() +
                           (lv.volume.orientation_issue.empty() ? "" : " (" + lv.volume.orientation_issue + ")") +
                           "; pass --assume-canonical to treat it as RAS");
      }
      lv.volume.axes = kCanonicalAxes;
    }
    CanonicalResult c;
    try {
      c = to_canonical(lv.volume);
    } catch (const std::exception& e) {
      throw CommandError(e.what());
    }
    const Volume input = normalize_minmax(c.volume);
    const Segmentation s = segment(ensemble, input, pp);
    const LabelMask mask(c.transform.invert(s.mask.data));
    const std::string stem = io::stem_of(f), ext = output_extension(f);
    const fs::path out = res.dir / (stem + "_mask" + ext);
    io::save_mask(out, mask, lv);
    run.output(out);
    if (io::is_raw(out)) run.output(raw::sidecar_path(out));
    res.masks.push_back(out);
    if (o.save_activations) {
      for (std::size_t a = 0; a < 3; ++a) {
        const fs::path ap = res.dir / (stem + "_act_" + s.activations[a].tag + ext);
        io::save_activation(ap, c.transform.invert(s.activations[a].data), lv);
        run.output(ap);
      }
      const fs::path cp = res.dir / (stem + "_act_consensus" + ext);
      io::save_activation(cp, c.transform.invert(s.consensus.data), lv);
      run.output(cp);
    }
  }
  run.finish(0);
  return res;
}

// ---------------------------------------------------------------- evaluate

struct EvaluateOptions {
  fs::path predictions;          // directory of <id>_mask.* files
  fs::path dataset;              // ground truth manifest
  std::string split = "test";    // "" for all items
  std::optional<fs::path> out;
  std::optional<fs::path> matrix;  // JSON list of {trained_on, tested_on, predictions, dataset, split}
};

struct EvaluateResult {
  fs::path dir;
  std::vector<EvalRecord> records;
  std::vector<GroupSummary> summary;
  std::vector<MatrixRow> matrix;
};

// Predictions and ground truth are compared on the canonical grid of the
// ground-truth volume, so left/right follow anatomy.
inline std::vector<EvalRecord> evaluate_directory(const fs::path& predictions, const fs::path& dataset,
                                                  const std::string& split) {
  if (!fs::is_directory(predictions)) throw CommandError("prediction directory not found: " + predictions.string());
  std::map<std::string, fs::path> preds;
  for (const auto& entry : fs::directory_iterator(predictions)) {
    if (!entry.is_regular_file() || !io::is_volume_file(entry.path())) continue;
    const std::string stem = io::stem_of(entry.path());
    const std::string suffix = "_mask";
    if (stem.size() > suffix.size() && stem.compare(stem.size() - suffix.size(), suffix.size(), suffix) == 0) {
      preds[stem.substr(0, stem.size() - suffix.size())] = entry.path();
    }
  }
  if (preds.empty()) throw CommandError("no prediction masks (*_mask.nii[.gz]/.raw) in " + predictions.string());
  io::DatasetManifest m;
  try {
    m = io::read_manifest(dataset);
  } catch (const std::exception& e) {
    throw CommandError(e.what());
  }
  const auto items = m.subset(split);
  if (items.empty()) throw CommandError("dataset has no items in split '" + split + "'");
  std::vector<std::string> missing, extra;
  std::set<std::string> ids;
  for (const auto* it : items) {
    ids.insert(it->id);
    if (!preds.count(it->id)) missing.push_back(it->id);
  }
  for (const auto& [id, p] : preds)
    if (!ids.count(id)) extra.push_back(id);
  if (!missing.empty() || !extra.empty()) {
    std::string msg = "prediction and ground-truth sets differ;";
    if (!missing.empty()) {
      msg += " missing predictions:";
      for (const auto& id : missing) msg += " " + id;
      msg += ";";
    }
    if (!extra.empty()) {
      msg += " predictions without ground truth:";
      for (const auto& id : extra) msg += " " + id;
    }
    throw CommandError(msg);
  }
  std::vector<EvalRecord> records;
  for (const auto* it : items) {
    const io::LoadedVolume lv = io::load_volume(m.root / it->volume);
    if (!lv.volume.axes) throw CommandError("missing orientation metadata in " + (m.root / it->volume).string());
    const LabelMask truth = io::load_mask(m.root / it->mask);
    const LabelMask pred = io::load_mask(preds.at(it->id));
    if (pred.extent() != truth.extent()) {
      throw CommandError("prediction for " + it->id + " has grid " + to_string(pred.extent()) + ", truth " +
                         to_string(truth.extent()));
    }
    const auto t = CanonicalTransform::from_axes(*lv.volume.axes, lv.volume.extent(), it->volume);
    records.push_back(evaluate_volume(LabelMask(t.apply(pred.data)), LabelMask(t.apply(truth.data)), it->id, it->cohort));
  }
  return records;
}

inline EvaluateResult cmd_evaluate(const EvaluateOptions& o) {
  EvaluateResult res;
  res.dir = resolve_run_dir(o.out, "evaluate", 0);
  RunManifest run("evaluate", res.dir);
  if (o.matrix) {
    std::ifstream in(*o.matrix);
    if (!in) throw CommandError("cannot read matrix file " + o.matrix->string());
    const json spec = json::parse(in);
    const fs::path base = o.matrix->parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };
    std::vector<MatrixCell> cells;
    for (const auto& cell : spec) {
      MatrixCell c;
      c.trained_on = cell.at("trained_on").get<std::string>();
      c.tested_on = cell.at("tested_on").get<std::string>();
      c.records = evaluate_directory(resolve(cell.at("predictions").get<std::string>()),
                                     resolve(cell.at("dataset").get<std::string>()), cell.value("split", std::string("test")));
      for (const auto& r : c.records) res.records.push_back(r);
      cells.push_back(std::move(c));
    }
    res.matrix = cross_domain_matrix(cells);
    run.write_text("matrix.csv", matrix_csv(res.matrix));
    run["inputs"] = {{"matrix", fs::absolute(*o.matrix).string()}, {"cells", spec}};
  } else {
    res.records = evaluate_directory(o.predictions, o.dataset, o.split);
    res.summary = aggregate(res.records);
    run.write_text("records.csv", records_csv(res.records));
    run.write_text("summary.csv", summary_table(res.summary));
    json recs = json::array();
    for (const auto& r : res.records) recs.push_back(to_json(r));
    run.write_json("records.json", recs);
    run["inputs"] = {{"predictions", fs::absolute(o.predictions).string()},
                     {"dataset", fs::absolute(o.dataset).string()},
                     {"split", o.split}};
  }
  run.finish(0);
  return res;
}

// ---------------------------------------------------------------- ablate

struct AblateOptions {
  fs::path dataset;
  std::optional<fs::path> out;
  std::vector<std::string> presets{"desk"};  // scale presets applied to every row
  std::optional<fs::path> config_file;
  std::vector<std::string> rows;             // table-s1-rowN names; empty = all six
  TrainOverrides overrides;
  int workers = 1;
};

struct AblateResult {
  fs::path dir;
  std::vector<GridResult> results;
};

inline AblateResult cmd_ablate(const AblateOptions& o) {
  std::vector<std::string> row_names = o.rows;
  if (row_names.empty()) {
    for (int i = 1; i <= 6; ++i) row_names.push_back("table-s1-row" + std::to_string(i));
  }
  std::vector<TrainConfig> rows;
  for (const auto& r : row_names) {
    std::vector<std::string> presets = o.presets;
    presets.push_back(r);
    TrainOverrides ov = o.overrides;
    ov.optimizer.reset();
    ov.lr.reset();
    ov.loss.reset();
    rows.push_back(resolve_train_config(presets, o.config_file, ov));
  }
  io::DatasetManifest m;
  try {
    m = io::read_manifest(o.dataset);
  } catch (const std::exception& e) {
    throw CommandError(std::string("missing dataset: ") + e.what());
  }
  const auto train = io::load_split(m, "train");
  const auto val = io::load_split(m, "validation");
  const auto test = io::load_split(m, "test");
  if (test.empty()) throw CommandError("ablation needs a non-empty test subset");
  AblateResult res;
  res.dir = resolve_run_dir(o.out, "ablate", rows.front().seed);
  RunManifest run("ablate", res.dir);
  try {
    res.results = ablation_grid(train, val, test, rows, o.workers);
  } catch (const std::invalid_argument& e) {
    throw CommandError(e.what());
  }
  run.write_text("ablation.csv", grid_table_csv(res.results));
  json j = json::array();
  std::vector<std::vector<double>> groups;
  for (std::size_t i = 0; i < res.results.size(); ++i) {
    const auto& g = res.results[i];
    json reports = json::array();
    for (const auto& r : g.reports) reports.push_back(to_json(r));
    json recs = json::array();
    std::vector<double> dice;
    for (const auto& r : g.records) {
      recs.push_back(to_json(r));
      dice.push_back(r.dice_both);
    }
    groups.push_back(dice);
    j.push_back({{"row", row_names[i]}, {"config", to_json(g.config)}, {"failed", g.failed}, {"diagnostic", g.diagnostic},
                 {"mean_dice", g.mean_dice}, {"reports", reports}, {"records", recs}});
  }
  run.write_json("ablation.json", j);
  plot::box_plot(run.path("ablation.png").string(), groups);
  run.output(run.path("ablation.png"));
  run["config"] = {{"presets", o.presets}, {"rows", row_names}};
  run["seeds"] = {{"master", rows.front().seed}};
  run.finish(0);
  return res;
}

// ---------------------------------------------------------------- consensus-report

struct ConsensusReportOptions {
  fs::path checkpoints;
  fs::path dataset;
  std::string split = "test";
  std::optional<fs::path> out;
  double threshold = 0.5;
};

struct ConsensusReportResult {
  fs::path dir;
  ComparisonReport report;
};

inline ConsensusReportResult cmd_consensus_report(const ConsensusReportOptions& o) {
  Ensemble ensemble = load_ensemble(o.checkpoints);
  io::DatasetManifest m;
  try {
    m = io::read_manifest(o.dataset);
  } catch (const std::exception& e) {
    throw CommandError(std::string("missing dataset: ") + e.what());
  }
  const auto test = io::load_split(m, o.split);
  if (test.empty()) throw CommandError("dataset has no items in split '" + o.split + "'");
  PostprocessConfig pp;
  pp.threshold = o.threshold;
  ConsensusReportResult res;
  res.dir = resolve_run_dir(o.out, "consensus-report", 0);
  RunManifest run("consensus-report", res.dir);
  res.report = consensus_vs_single_report(ensemble, test, pp);
  run.write_text("consensus_vs_single.csv", arms_csv(res.report));
  run.write_text("consensus_vs_single_summary.csv", arms_summary_csv(res.report));
  std::vector<std::vector<double>> groups;
  for (const auto& arm : arm_names()) groups.push_back(res.report.dice_of(arm));
  plot::box_plot(run.path("consensus_vs_single.png").string(), groups);
  run.output(run.path("consensus_vs_single.png"));
  run["inputs"] = {{"checkpoints", fs::absolute(o.checkpoints).string()},
                   {"dataset", fs::absolute(o.dataset).string()},
                   {"split", o.split}};
  run["config"] = {{"threshold", o.threshold}};
  run.finish(0);
  return res;
}

}  // namespace hipseg::cli
