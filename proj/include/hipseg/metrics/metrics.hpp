#pragma once

// Volume-level evaluation: Dice (whole grid and per hemisphere), precision,
// recall, voxel confusion counts, and mean/std aggregation by cohort.
//
// Hemispheres come from a grid split on the canonical sagittal axis: x <
// floor(X/2) is left (RAS: x grows towards the right), the rest is right.
// An empty half in both masks scores 1; prediction on an empty truth half
// scores 0.

#include <cmath>
#include <cstdint>
#include <iomanip>
#include <map>
#include <nlohmann/json.hpp>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/losses/dice.hpp"
#include "hipseg/volumes/volume.hpp"

namespace hipseg {

struct EvalRecord {
  std::string volume_id;
  std::string cohort;
  double dice_both = 0, dice_left = 0, dice_right = 0;
  double precision = 0, recall = 0;
  std::uint64_t tp = 0, fp = 0, fn = 0, tn = 0;
};

inline nlohmann::json to_json(const EvalRecord& r) {
  return {{"volume", r.volume_id}, {"cohort", r.cohort},     {"dice_both", r.dice_both}, {"dice_left", r.dice_left},
          {"dice_right", r.dice_right}, {"precision", r.precision}, {"recall", r.recall}, {"tp", r.tp},
          {"fp", r.fp},               {"fn", r.fn},             {"tn", r.tn}};
}

inline double mask_dice(const LabelMask& pred, const LabelMask& truth) {
  require_same_extent(pred.extent(), truth.extent(), "dice");
  std::vector<double> p(pred.data.size()), g(truth.data.size());
  for (std::size_t i = 0; i < p.size(); ++i) {
    p[i] = pred.data[i] ? 1.0 : 0.0;
    g[i] = truth.data[i] ? 1.0 : 0.0;
  }
  return dice_coefficient<double>(p, g);
}

// Dice restricted to x in [x0, x1) along the sagittal axis.
inline double slab_dice(const LabelMask& pred, const LabelMask& truth, int x0, int x1) {
  const Extent3& e = pred.extent();
  std::vector<double> p, g;
  p.reserve(static_cast<std::size_t>(x1 - x0) * e[1] * e[2]);
  g.reserve(p.capacity());
  for (int k = 0; k < e[2]; ++k)
    for (int j = 0; j < e[1]; ++j)
      for (int i = x0; i < x1; ++i) {
        p.push_back(pred.data(i, j, k) ? 1.0 : 0.0);
        g.push_back(truth.data(i, j, k) ? 1.0 : 0.0);
      }
  return dice_coefficient<double>(p, g);
}

inline EvalRecord evaluate_volume(const LabelMask& pred, const LabelMask& truth, std::string volume_id = {},
                                  std::string cohort = {}) {
  require_same_extent(pred.extent(), truth.extent(), "evaluate_volume");
  EvalRecord r;
  r.volume_id = std::move(volume_id);
  r.cohort = std::move(cohort);
  for (std::size_t i = 0; i < pred.data.size(); ++i) {
    const bool p = pred.data[i] != 0, g = truth.data[i] != 0;
    if (p && g) ++r.tp;
    else if (p) ++r.fp;
    else if (g) ++r.fn;
    else ++r.tn;
  }
  r.dice_both = mask_dice(pred, truth);
  const int mid = pred.extent()[0] / 2;
  r.dice_left = slab_dice(pred, truth, 0, mid);
  r.dice_right = slab_dice(pred, truth, mid, pred.extent()[0]);
  r.precision = r.tp + r.fp > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fp) : (r.fn == 0 ? 1.0 : 0.0);
  r.recall = r.tp + r.fn > 0 ? static_cast<double>(r.tp) / static_cast<double>(r.tp + r.fn) : (r.fp == 0 ? 1.0 : 0.0);
  return r;
}

struct Summary {
  double mean = 0, std = 0;
  std::size_t n = 0;
};

// Sample standard deviation; 0 for a single value.
inline Summary summarize(std::span<const double> values) {
  if (values.empty()) throw std::invalid_argument("summarize: no values");
  Summary s;
  s.n = values.size();
  double sum = 0;
  for (double v : values) sum += v;
  s.mean = sum / static_cast<double>(s.n);
  if (s.n > 1) {
    double ss = 0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / static_cast<double>(s.n - 1));
  }
  return s;
}

inline std::string format_pm(const Summary& s, int decimals = 2) {
  std::ostringstream os;
  os << std::fixed << std::setprecision(decimals) << s.mean << "±" << s.std;
  return os.str();
}

inline const std::vector<std::string>& metric_names() {
  static const std::vector<std::string> names{"dice_both", "dice_left", "dice_right", "precision", "recall"};
  return names;
}

inline double metric_value(const EvalRecord& r, const std::string& name) {
  if (name == "dice_both") return r.dice_both;
  if (name == "dice_left") return r.dice_left;
  if (name == "dice_right") return r.dice_right;
  if (name == "precision") return r.precision;
  if (name == "recall") return r.recall;
  throw std::invalid_argument("unknown metric " + name);
}

struct GroupSummary {
  std::string group;
  std::size_t n = 0;
  std::map<std::string, Summary> metrics;
};

// One row per cohort (sorted by name), plus "all" when more than one cohort is present.
inline std::vector<GroupSummary> aggregate(std::span<const EvalRecord> records) {
  if (records.empty()) throw std::invalid_argument("aggregate: no records");
  std::map<std::string, std::vector<const EvalRecord*>> groups;
  for (const auto& r : records) groups[r.cohort].push_back(&r);
  auto summarize_group = [](const std::string& name, const std::vector<const EvalRecord*>& rs) {
    GroupSummary g;
    g.group = name;
    g.n = rs.size();
    for (const auto& m : metric_names()) {
      std::vector<double> v;
      for (const auto* r : rs) v.push_back(metric_value(*r, m));
      g.metrics[m] = summarize(v);
    }
    return g;
  };
  std::vector<GroupSummary> out;
  for (const auto& [name, rs] : groups) out.push_back(summarize_group(name, rs));
  if (groups.size() > 1) {
    std::vector<const EvalRecord*> all;
    for (const auto& r : records) all.push_back(&r);
    out.push_back(summarize_group("all", all));
  }
  return out;
}

inline std::string records_csv(std::span<const EvalRecord> records) {
  std::ostringstream os;
  os << "volume,cohort,dice_both,dice_left,dice_right,precision,recall,tp,fp,fn,tn\n";
  os << std::setprecision(10);
  for (const auto& r : records) {
    os << r.volume_id << ',' << r.cohort << ',' << r.dice_both << ',' << r.dice_left << ',' << r.dice_right << ','
       << r.precision << ',' << r.recall << ',' << r.tp << ',' << r.fp << ',' << r.fn << ',' << r.tn << '\n';
  }
  return os.str();
}

// Table in the "cohort | n | Both | Left | Right | Precision | Recall" layout.
inline std::string summary_table(std::span<const GroupSummary> groups) {
  std::ostringstream os;
  os << "cohort,n,both,left,right,precision,recall\n";
  for (const auto& g : groups) {
    os << g.group << ',' << g.n;
    for (const auto& m : metric_names()) os << ',' << format_pm(g.metrics.at(m));
    os << '\n';
  }
  return os.str();
}

}  // namespace hipseg
