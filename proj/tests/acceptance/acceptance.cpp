// Acceptance run: one PASS/FAIL line per criterion. Criteria 8-11 train three
// desk-scale ensembles (control, mixed, control+mixed) and take about an hour
// on one core. Artifacts land under --out.

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <nlohmann/json.hpp>
#include <optional>
#include <set>
#include <sstream>

#include "hipseg/cli/commands.hpp"
#include "hipseg/common/random.hpp"
#include "hipseg/losses/distance_map.hpp"
#include "hipseg/losses/head_loss.hpp"
#include "oracles.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace hipseg;

namespace {

using Clock = std::chrono::steady_clock;
using Vec = std::vector<double>;

struct Outcome {
  bool pass = false;
  std::string detail;
};

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(double v, int digits = 4) {
  std::ostringstream os;
  os << std::setprecision(digits) << v;
  return os.str();
}

// ---------------------------------------------------------------- 1. gradients

double rel_err(const Vec& a, const Vec& b) {
  double d = 0, na = 0, nb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    d += (a[i] - b[i]) * (a[i] - b[i]);
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  return std::sqrt(d) / std::max(std::sqrt(std::max(na, nb)), 1e-300);
}

template <typename F>
Vec central_difference(Vec& x, F f, double eps = 1e-6) {
  Vec g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double keep = x[i];
    x[i] = keep + eps;
    const double up = f();
    x[i] = keep - eps;
    const double down = f();
    x[i] = keep;
    g[i] = (up - down) / (2 * eps);
  }
  return g;
}

Outcome loss_gradients() {
  double worst = 0;
  int checks = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng = make_rng(77, {seed});
    const std::size_t n = 64;  // 8x8
    Vec p0(n), p1(n), g1(n), g0(n), phi(n);
    for (std::size_t i = 0; i < n; ++i) {
      p0[i] = uniform(rng, 0.02, 0.98);
      p1[i] = uniform(rng, 0.02, 0.98);
      g1[i] = uniform(rng, 0, 1) < 0.3 ? 1.0 : 0.0;
      g0[i] = 1.0 - g1[i];
      phi[i] = uniform(rng, -4, 6);
    }
    auto note = [&](const Vec& a, const Vec& b) {
      worst = std::max(worst, rel_err(a, b));
      ++checks;
    };
    Vec grad(n);
    dice_loss<double>(p1, g1, grad);
    note(grad, central_difference(p1, [&] { return dice_loss<double>(p1, g1); }));

    Vec d0(n), d1(n);
    generalized_dice_loss<double>({p0, p1}, {g0, g1}, {d0, d1});
    auto gdl = [&] { return generalized_dice_loss<double>({p0, p1}, {g0, g1}); };
    note(d0, central_difference(p0, gdl));
    note(d1, central_difference(p1, gdl));

    const BoundarySchedule s{static_cast<int>(seed % 5), 5};
    boundary_loss<double>({p0, p1}, {g0, g1}, phi, s, {d0, d1});
    auto bl = [&] { return boundary_loss<double>({p0, p1}, {g0, g1}, phi, s).value; };
    note(d1, central_difference(p1, bl));
    if (s.alpha() > 0) note(d0, central_difference(p0, bl));
  }
  return {worst < 1e-4, std::to_string(checks) + " gradient checks over 50 seeds, worst relative error " + fmt(worst, 3)};
}

// ---------------------------------------------------------------- 2. dice oracle

Outcome dice_oracle() {
  Rng rng = make_rng(2);
  double worst = 0;
  for (int k = 0; k < 1000; ++k) {
    const std::size_t n = 512;
    std::vector<std::uint8_t> a(n), b(n);
    const double ra = uniform(rng, 0, 0.6), rb = uniform(rng, 0, 0.6);
    for (std::size_t i = 0; i < n; ++i) {
      a[i] = uniform(rng, 0, 1) < ra;
      b[i] = uniform(rng, 0, 1) < rb;
    }
    const Vec pa(a.begin(), a.end()), pb(b.begin(), b.end());
    worst = std::max(worst, std::abs(dice_coefficient<double>(pa, pb) - oracle::dice(a, b)));
  }
  return {worst < 1e-12, "1000 random 8^3 pairs, worst |error| " + fmt(worst, 3)};
}

// ---------------------------------------------------------------- 3. components

Outcome components_oracle() {
  Rng rng = make_rng(3);
  int volumes = 0, mismatches = 0, keep_errors = 0;
  for (int k = 0; k < 100; ++k) {
    LabelMask m({16, 16, 16});
    const double rate = uniform(rng, 0.05, 0.35);
    for (auto& v : m.data.values()) v = uniform(rng, 0, 1) < rate;
    const std::vector<std::uint8_t> bytes(m.data.values().begin(), m.data.values().end());
    for (int conn : {6, 26}) {
      std::vector<int> ref_labels;
      const auto ref_sizes = oracle::flood_fill(bytes, 16, 16, 16, conn, &ref_labels);
      const ComponentSet cs = label_components(m, parse_connectivity(conn));
      // Same partition <=> a bijection between labels; raster-order labelling makes it the identity.
      bool same = cs.sizes == ref_sizes;
      for (std::size_t i = 0; same && i < ref_labels.size(); ++i) same = static_cast<int>(cs.labels[i]) == ref_labels[i];
      mismatches += !same;

      std::vector<int> order(ref_sizes.size());
      for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i) + 1;
      std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return ref_sizes[a - 1] > ref_sizes[b - 1]; });
      const LabelMask kept = keep_largest(cs, 2);
      for (std::size_t i = 0; i < ref_labels.size(); ++i) {
        const int l = ref_labels[i];
        const bool expect = l != 0 && (l == order[0] || (order.size() > 1 && l == order[1]));
        if (kept.data[i] != (expect ? 1 : 0)) {
          ++keep_errors;
          break;
        }
      }
    }
    ++volumes;
  }
  // Tie rule: three equal components, the two whose first voxel comes first in raster order survive.
  LabelMask tie({9, 3, 1});
  for (Index3 p : std::vector<Index3>{{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {4, 2, 0}, {5, 2, 0}, {6, 2, 0}, {8, 0, 0}, {8, 1, 0}, {8, 2, 0}})
    tie.data(p[0], p[1], p[2]) = 1;
  const LabelMask tk = keep_largest(tie, 2, Connectivity::six);
  const bool tie_ok = tk.data(0, 0, 0) && tk.data(8, 0, 0) && !tk.data(4, 2, 0) && tk.count() == 6;
  return {mismatches == 0 && keep_errors == 0 && tie_ok,
          std::to_string(volumes) + " volumes x {6,26}: " + std::to_string(mismatches) + " partition mismatches, " +
              std::to_string(keep_errors) + " keep-2 errors, tie rule " + (tie_ok ? "ok" : "violated")};
}

// ---------------------------------------------------------------- 4. schedule endpoints

Outcome boundary_schedule() {
  Rng rng = make_rng(4);
  const std::size_t n = 64;
  const int E = 11;
  double worst = 0;
  for (int k = 0; k < 20; ++k) {
    Vec p0(n), p1(n), g0(n), g1(n), phi(n);
    for (std::size_t i = 0; i < n; ++i) {
      p1[i] = uniform(rng, 0, 1);
      p0[i] = 1 - p1[i];
      g1[i] = uniform(rng, 0, 1) < 0.4;
      g0[i] = 1 - g1[i];
      phi[i] = uniform(rng, -5, 5);
    }
    const double gdl = generalized_dice_loss<double>({p0, p1}, {g0, g1});
    double surface = 0;
    for (std::size_t i = 0; i < n; ++i) surface += phi[i] * p1[i];
    surface /= static_cast<double>(n);
    const double first = boundary_loss<double>({p0, p1}, {g0, g1}, phi, {0, E}).value;
    const double last = boundary_loss<double>({p0, p1}, {g0, g1}, phi, {E - 1, E}).value;
    const double mid = boundary_loss<double>({p0, p1}, {g0, g1}, phi, {(E - 1) / 2, E}).value;
    worst = std::max({worst, std::abs(first - gdl), std::abs(last - surface), std::abs(mid - 0.5 * (gdl + surface))});
  }
  const bool alphas = BoundarySchedule{0, E}.alpha() == 1.0 && BoundarySchedule{E - 1, E}.alpha() == 0.0 &&
                      BoundarySchedule{(E - 1) / 2, E}.alpha() == 0.5;
  return {alphas && worst < 1e-12, "alpha 1 -> 0.5 -> 0 exact; worst endpoint/midpoint error " + fmt(worst, 3)};
}

// ---------------------------------------------------------------- 5. distance map

Outcome distance_map() {
  int grids = 0, bad = 0;
  Rng rng = make_rng(5);
  for (int rows = 1; rows <= 16; ++rows)
    for (int cols = 1; cols <= 16; ++cols)
      for (int rep = 0; rep < 3; ++rep) {
        Image2D<std::uint8_t> g(1, rows, cols, 0);
        const double rate = uniform(rng, 0.05, 0.8);
        for (auto& v : g.values()) v = uniform(rng, 0, 1) < rate;
        bool has = false;
        const auto ref = oracle::signed_distance({g.values().begin(), g.values().end()}, rows, cols, &has);
        const DistanceMap d = signed_distance_map(g);
        ++grids;
        if (d.degenerate != !has) {
          ++bad;
          continue;
        }
        if (!has) continue;
        for (std::size_t i = 0; i < ref.size(); ++i)
          if (d.phi.values()[i] != ref[i]) {
            ++bad;
            break;
          }
      }
  return {bad == 0, std::to_string(grids) + " random grids of every shape up to 16x16, " + std::to_string(bad) + " mismatches"};
}

// ---------------------------------------------------------------- 6. sampler

bool in_plane_border(const LabelMask& m, Orientation o, Index3 v) {
  if (!m.data(v[0], v[1], v[2])) return false;
  for (int axis = 0; axis < 3; ++axis) {
    if (axis == axis_of(o)) continue;
    for (int s : {-1, 1}) {
      Index3 n = v;
      n[static_cast<std::size_t>(axis)] += s;
      if (!m.data.contains(n[0], n[1], n[2]) || !m.data(n[0], n[1], n[2])) return true;
    }
  }
  return false;
}

Outcome sampler_statistics() {
  PhantomSpec spec;
  spec.seed = 6;
  spec.count = 4;
  std::vector<LabeledVolume> data;
  for (auto& p : generate(spec)) data.push_back(std::move(p.sample));
  std::map<std::string, const LabeledVolume*> by_id;
  for (const auto& d : data) by_id[d.id] = &d;

  std::ostringstream detail;
  bool pass = true;
  for (Orientation o : kOrientations) {
    SamplerConfig c;
    c.orientation = o;
    c.seed = 60 + static_cast<std::uint64_t>(o);
    c.epoch_size = 10000;
    c.positive_fraction = 0.8;
    c.augment.enabled = false;
    std::size_t n = 0, pos = 0, pos_border = 0;
    for (const auto& b : epoch_stream(data, c, 500))
      for (std::size_t k = 0; k < b.provenance.size(); ++k) {
        const auto& p = b.provenance[k];
        ++n;
        if (!p.positive) continue;
        ++pos;
        pos_border += in_plane_border(by_id.at(p.volume_id)->mask, o, p.center);
      }
    const double f = static_cast<double>(pos) / static_cast<double>(n);
    const bool ok = n == 10000 && f >= 0.78 && f <= 0.82 && pos_border == pos;
    pass = pass && ok;
    detail << name_of(o) << " " << fmt(f, 4) << " (" << pos_border << "/" << pos << " border) ";
  }
  return {pass, "positive fraction over 10^4 draws: " + detail.str()};
}

// ---------------------------------------------------------------- 7. trainer semantics

Outcome trainer_semantics() {
  std::vector<std::string> failures;
  auto scripted = [](std::vector<double> val, std::vector<int>* snaps) {
    LoopHooks h;
    h.train_epoch = [](int, double) { return EpochStats{}; };
    h.validate = [val](int e) { return val.at(static_cast<std::size_t>(e)); };
    h.snapshot = [snaps](int e, double) { snaps->push_back(e + 1); };
    return h;
  };
  // Patience 3 on .5 .6 .6 .6 .6: best at epoch 2, stop after epoch 5.
  {
    std::vector<int> snaps;
    const TrainReport r = run_training_loop({{0.01, 0.1, 250}, 100, 3}, scripted({.5, .6, .6, .6, .6, .9, .9}, &snaps));
    if (r.epochs.size() != 5 || r.best_epoch != 2 || r.stop_reason != StopReason::patience || snaps != std::vector<int>{1, 2})
      failures.push_back("patience trace");
  }
  // LR: epochs 1..250 at the initial rate, 251.. at x0.1.
  {
    std::vector<double> val(300);
    for (std::size_t i = 0; i < val.size(); ++i) val[i] = 0.001 * static_cast<double>(i);
    std::vector<int> snaps;
    const TrainReport r = run_training_loop({{0.001, 0.1, 250}, 300, 200}, scripted(val, &snaps));
    bool ok = r.epochs.size() == 300 && r.stop_reason == StopReason::max_epochs;
    for (std::size_t i = 0; ok && i < r.epochs.size(); ++i) {
      const double expect = i < 250 ? 0.001 : 0.001 * 0.1;
      ok = std::abs(r.epochs[i].lr - expect) < 1e-18;
    }
    if (!ok) failures.push_back("lr step");
  }
  // Best checkpoint: the snapshot of the highest validation epoch is the one kept.
  {
    std::vector<int> snaps;
    const TrainReport r = run_training_loop({{0.01, 0.1, 250}, 8, 4}, scripted({.3, .7, .5, .8, .8, .2, .1, .0}, &snaps));
    if (r.best_epoch != 4 || r.best_val_dice != 0.8 || snaps != std::vector<int>{1, 2, 4} || r.epochs.size() != 8)
      failures.push_back("best checkpoint");
  }
  std::string d = "patience stop, lr step at 250, best-checkpoint selection";
  for (const auto& f : failures) d += "; FAILED " + f;
  return {failures.empty(), d};
}

// ---------------------------------------------------------------- 8-11. desk-scale pipeline

struct Desk {
  fs::path root;
  std::uint64_t seed = 7;

  fs::path ds(const std::string& name) const { return root / ("ds_" + name); }

  io::DatasetManifest synth(const std::string& name, int count, std::uint64_t seed_, std::vector<std::string> cohorts) const {
    cli::SynthOptions o;
    o.out = ds(name);
    o.count = count;
    o.seed = seed_;
    o.cohorts = std::move(cohorts);
    return cli::cmd_synth(o).manifest;
  }

  cli::TrainResult train(const fs::path& dataset, const std::string& name) const {
    cli::TrainOptions o;
    o.dataset = dataset;
    o.out = root / ("train_" + name);
    o.presets = {"desk"};
    o.overrides.seed = seed;
    o.quiet = true;
    const auto t0 = Clock::now();
    cli::TrainResult r = cli::cmd_train(o);
    std::cerr << "  trained " << name << " in " << fmt(seconds_since(t0), 4) << " s:";
    for (const auto& run : r.outcome.runs)
      std::cerr << ' ' << run.report.orientation << " best " << run.report.best_epoch << '/' << run.report.epochs.size()
                << " val " << fmt(run.report.best_val_dice, 3);
    std::cerr << '\n';
    if (r.exit_code != 0) throw std::runtime_error("training " + name + " diverged");
    return r;
  }

  fs::path predict(const fs::path& checkpoints, std::vector<fs::path> inputs, const std::string& name) const {
    cli::PredictOptions o;
    o.checkpoints = checkpoints;
    o.inputs = std::move(inputs);
    o.out = root / ("pred_" + name);
    return cli::cmd_predict(o).dir;
  }

  std::vector<EvalRecord> evaluate(const fs::path& predictions, const fs::path& dataset, const std::string& split,
                                   const std::string& name) const {
    cli::EvaluateOptions o;
    o.predictions = predictions;
    o.dataset = dataset;
    o.split = split;
    o.out = root / ("eval_" + name);
    return cli::cmd_evaluate(o).records;
  }
};

double mean_of(const std::vector<EvalRecord>& rs, double EvalRecord::*field) {
  double s = 0;
  for (const auto& r : rs) s += r.*field;
  return rs.empty() ? 0.0 : s / static_cast<double>(rs.size());
}

class Pipeline {
 public:
  explicit Pipeline(fs::path root) : desk_{std::move(root)} {}

  // 30 controls, desk preset, then consensus + threshold 0.5 + keep-2 on the held-out split.
  Outcome end_to_end() {
    const auto t0 = Clock::now();
    const io::DatasetManifest m = desk_.synth("control", 30, 1, {"control"});
    control_ = desk_.train(desk_.ds("control"), "control").dir;
    std::vector<fs::path> test;
    for (const auto* it : m.subset("test")) test.push_back(m.root / it->volume);
    const fs::path pred = desk_.predict(*control_, test, "control_test");
    const auto records = desk_.evaluate(pred, desk_.ds("control"), "test", "control_test");
    const double secs = seconds_since(t0);
    const double dice = mean_of(records, &EvalRecord::dice_both);
    std::ostringstream d;
    d << "mean test Dice " << fmt(dice, 4) << " over " << records.size() << " held-out controls in " << fmt(secs, 4)
      << " s (floor 0.85, limit 1200 s)";
    return {dice >= 0.85 && secs < 1200.0 && !records.empty(), d.str()};
  }

  Outcome consensus_direction() {
    desk_.synth("control_heldout", 24, 101, {"control"});
    cli::ConsensusReportOptions o;
    o.checkpoints = control_checkpoints();
    o.dataset = desk_.ds("control_heldout");
    o.split = "";
    o.out = desk_.root / "consensus_report";
    const auto r = cli::cmd_consensus_report(o);
    const double cons = r.report.arms.at("consensus").mean;
    const double single = r.report.single_arm_mean();
    const bool files = fs::exists(r.dir / "consensus_vs_single.csv") && fs::exists(r.dir / "consensus_vs_single.png");
    const std::size_t n = r.report.arms.at("consensus").n;
    std::ostringstream d;
    d << "consensus " << fmt(cons, 4) << " vs single-arm mean " << fmt(single, 4) << " (sag "
      << fmt(r.report.arms.at("sagittal").mean, 3) << ", cor " << fmt(r.report.arms.at("coronal").mean, 3) << ", ax "
      << fmt(r.report.arms.at("axial").mean, 3) << ") on " << n << " phantoms; csv+png " << (files ? "written" : "MISSING");
    return {n >= 20 && cons >= single - 0.02 && files, d.str()};
  }

  Outcome resection() {
    desk_.synth("resected_left", 10, 201, {"resected-left"});
    const fs::path pred = desk_.predict(control_checkpoints(), {desk_.ds("resected_left") / "images"}, "control_on_resected");
    const auto records = desk_.evaluate(pred, desk_.ds("resected_left"), "", "control_on_resected");
    std::size_t zero = 0;
    for (const auto& r : records) zero += r.dice_left == 0.0;
    const double frac = records.empty() ? 0.0 : static_cast<double>(zero) / static_cast<double>(records.size());
    const double right = mean_of(records, &EvalRecord::dice_right);
    std::ostringstream d;
    d << zero << "/" << records.size() << " resected-left phantoms with dice_left == 0 (" << fmt(100 * frac, 3)
      << "%, need >= 30%); intact right side mean Dice " << fmt(right, 4) << " (need >= 0.8)";
    return {frac >= 0.3 && right >= 0.8, d.str()};
  }

  // Table-4 analog. "mixed" = atrophy + resected-left + resected-right phantoms.
  Outcome cross_domain() {
    const std::vector<std::string> mixed{"atrophy", "resected-left", "resected-right"};
    const io::DatasetManifest mm = desk_.synth("mixed", 30, 301, mixed);
    desk_.synth("mixed_heldout", 24, 401, mixed);
    if (!fs::exists(desk_.ds("control_heldout"))) desk_.synth("control_heldout", 24, 101, {"control"});

    // control + mixed training data: a manifest pointing into both datasets.
    io::DatasetManifest both;
    both.root = desk_.ds("combined");
    fs::create_directories(both.root);
    for (const auto* src : {&control_manifest(), &mm}) {
      const std::string rel = "../" + src->root.filename().string() + "/";
      for (auto it : src->items) {
        it.volume = rel + it.volume;
        it.mask = rel + it.mask;
        both.items.push_back(it);
      }
    }
    both.extra["note"] = "union of ds_control and ds_mixed";
    io::write_manifest(both);

    const fs::path mixed_ck = desk_.train(desk_.ds("mixed"), "mixed").dir;
    const fs::path both_ck = desk_.train(both.root, "combined").dir;

    const fs::path ctrl_imgs = desk_.ds("control_heldout") / "images", mixed_imgs = desk_.ds("mixed_heldout") / "images";
    const json cells = json::array({
        {{"trained_on", "control"}, {"tested_on", "mixed"}, {"predictions", desk_.predict(control_checkpoints(), {mixed_imgs}, "control_on_mixed").string()},
         {"dataset", desk_.ds("mixed_heldout").string()}, {"split", ""}},
        {{"trained_on", "mixed"}, {"tested_on", "control"}, {"predictions", desk_.predict(mixed_ck, {ctrl_imgs}, "mixed_on_control").string()},
         {"dataset", desk_.ds("control_heldout").string()}, {"split", ""}},
        {{"trained_on", "control+mixed"}, {"tested_on", "control"}, {"predictions", desk_.predict(both_ck, {ctrl_imgs}, "combined_on_control").string()},
         {"dataset", desk_.ds("control_heldout").string()}, {"split", ""}},
        {{"trained_on", "control+mixed"}, {"tested_on", "mixed"}, {"predictions", desk_.predict(both_ck, {mixed_imgs}, "combined_on_mixed").string()},
         {"dataset", desk_.ds("mixed_heldout").string()}, {"split", ""}},
    });
    const fs::path spec = desk_.root / "matrix.json";
    std::ofstream(spec) << cells.dump(2);
    cli::EvaluateOptions o;
    o.matrix = spec;
    o.out = desk_.root / "eval_matrix";
    const auto res = cli::cmd_evaluate(o);
    if (res.matrix.size() != 4) return {false, "matrix has " + std::to_string(res.matrix.size()) + " rows"};
    auto m = [&](std::size_t i) { return res.matrix[i].metrics.at("dice_both").mean; };
    // Same test domain, mixed training vs the cross-domain model.
    const bool on_control = m(2) > m(1), on_mixed = m(3) > m(0);
    std::ostringstream d;
    d << "control->mixed " << fmt(m(0), 3) << ", mixed->control " << fmt(m(1), 3) << ", control+mixed->control "
      << fmt(m(2), 3) << ", control+mixed->mixed " << fmt(m(3), 3) << " (matrix.csv in " << res.dir.filename().string()
      << ")";
    return {on_control && on_mixed, d.str()};
  }

 private:
  const fs::path& control_checkpoints() {
    if (!control_) throw std::runtime_error("control ensemble not trained (criterion 8 did not run)");
    return *control_;
  }
  const io::DatasetManifest& control_manifest() {
    if (!control_manifest_) control_manifest_ = io::read_manifest(desk_.ds("control"));
    return *control_manifest_;
  }

  Desk desk_;
  std::optional<fs::path> control_;
  std::optional<io::DatasetManifest> control_manifest_;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"acceptance criteria"};
  std::string out = "acceptance_artifacts";
  std::vector<int> only;
  app.add_option("--out", out, "artifact directory")->capture_default_str();
  app.add_option("--only", only, "run only these criterion numbers (8 is a prerequisite of 9-11)");
  CLI11_PARSE(app, argc, argv);

  const fs::path root = fs::absolute(out);
  fs::remove_all(root);
  fs::create_directories(root);
  Pipeline pipeline(root);

  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria{
      {"loss gradient suite", loss_gradients},
      {"dice oracle", dice_oracle},
      {"connected-components oracle", components_oracle},
      {"boundary-loss schedule endpoints", boundary_schedule},
      {"distance-map oracle", distance_map},
      {"sampler statistics", sampler_statistics},
      {"trainer semantics", trainer_semantics},
      {"end-to-end desk run", [&] { return pipeline.end_to_end(); }},
      {"consensus direction", [&] { return pipeline.consensus_direction(); }},
      {"resection failure mode", [&] { return pipeline.resection(); }},
      {"cross-domain matrix", [&] { return pipeline.cross_domain(); }},
  };

  int failed = 0;
  json summary = json::array();
  std::ofstream report(root / "acceptance_report.txt");
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const int number = static_cast<int>(i) + 1;
    if (!only.empty() && std::find(only.begin(), only.end(), number) == only.end()) continue;
    const auto t0 = Clock::now();
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    const double secs = seconds_since(t0);
    std::ostringstream line;
    line << (o.pass ? "PASS" : "FAIL") << " [" << number << "] " << criteria[i].first << ": " << o.detail << " ("
         << fmt(secs, 4) << " s)";
    std::cout << line.str() << std::endl;
    report << line.str() << '\n';
    summary.push_back({{"criterion", number}, {"name", criteria[i].first}, {"pass", o.pass}, {"detail", o.detail}, {"seconds", secs}});
    failed += !o.pass;
  }
  std::ofstream(root / "acceptance_summary.json") << summary.dump(2) << '\n';
  std::cout << (failed ? std::to_string(failed) + " criteria failed" : std::string("all criteria passed")) << std::endl;
  return failed ? 1 : 0;
}
