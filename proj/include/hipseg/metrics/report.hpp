#pragma once

// Consensus against single-network arms, and the trained-on / tested-on
// cross-domain matrix.

#include <array>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "hipseg/fusion/pipeline.hpp"
#include "hipseg/metrics/metrics.hpp"

namespace hipseg {

inline const std::array<std::string, 4>& arm_names() {
  static const std::array<std::string, 4> names{"sagittal", "coronal", "axial", "consensus"};
  return names;
}

struct ArmRow {
  std::string volume_id;
  std::string cohort;
  std::string arm;
  double dice = 0.0;
};

struct ComparisonReport {
  std::vector<ArmRow> rows;               // one per (volume, arm)
  std::map<std::string, Summary> arms;    // Dice summary per arm
  std::vector<EvalRecord> consensus_records;

  std::vector<double> dice_of(const std::string& arm) const {
    std::vector<double> v;
    for (const auto& r : rows)
      if (r.arm == arm) v.push_back(r.dice);
    return v;
  }
  double single_arm_mean() const {
    return (arms.at("sagittal").mean + arms.at("coronal").mean + arms.at("axial").mean) / 3.0;
  }
};

// Every arm goes through the same threshold and component filtering.
inline ComparisonReport consensus_vs_single_report(Ensemble& ensemble, std::span<const LabeledVolume> test,
                                                   const PostprocessConfig& pp = {}) {
  if (test.empty()) throw std::invalid_argument("consensus report: test set is empty");
  ComparisonReport rep;
  for (const auto& v : test) {
    const Segmentation s = segment(ensemble, v.volume, pp);
    for (std::size_t a = 0; a < 3; ++a) {
      rep.rows.push_back({v.id, v.cohort, arm_names()[a], mask_dice(postprocess(s.activations[a], pp), v.mask)});
    }
    rep.rows.push_back({v.id, v.cohort, "consensus", mask_dice(s.mask, v.mask)});
    rep.consensus_records.push_back(evaluate_volume(s.mask, v.mask, v.id, v.cohort));
  }
  for (const auto& arm : arm_names()) rep.arms[arm] = summarize(rep.dice_of(arm));
  return rep;
}

inline std::string arms_csv(const ComparisonReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "volume,cohort,arm,dice\n";
  for (const auto& row : r.rows) os << row.volume_id << ',' << row.cohort << ',' << row.arm << ',' << row.dice << '\n';
  return os.str();
}

inline std::string arms_summary_csv(const ComparisonReport& r) {
  std::ostringstream os;
  os << "arm,n,mean,std,formatted\n";
  for (const auto& arm : arm_names()) {
    const Summary& s = r.arms.at(arm);
    os << arm << ',' << s.n << ',' << s.mean << ',' << s.std << ',' << format_pm(s) << '\n';
  }
  return os.str();
}

struct MatrixCell {
  std::string trained_on;
  std::string tested_on;
  std::vector<EvalRecord> records;
};

struct MatrixRow {
  std::string trained_on;
  std::string tested_on;
  std::size_t n = 0;
  std::map<std::string, Summary> metrics;
};

inline std::vector<MatrixRow> cross_domain_matrix(std::span<const MatrixCell> cells) {
  std::vector<MatrixRow> rows;
  for (const auto& c : cells) {
    if (c.records.empty()) throw std::invalid_argument("matrix cell " + c.trained_on + " -> " + c.tested_on + " is empty");
    MatrixRow r{c.trained_on, c.tested_on, c.records.size(), {}};
    for (const auto& m : metric_names()) {
      std::vector<double> v;
      for (const auto& rec : c.records) v.push_back(metric_value(rec, m));
      r.metrics[m] = summarize(v);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

inline std::string matrix_csv(std::span<const MatrixRow> rows) {
  std::ostringstream os;
  os << "trained_on,tested_on,n,both,left,right,precision,recall,both_mean\n";
  for (const auto& r : rows) {
    os << r.trained_on << ',' << r.tested_on << ',' << r.n;
    for (const auto& m : metric_names()) os << ',' << format_pm(r.metrics.at(m));
    os << ',' << r.metrics.at("dice_both").mean << '\n';
  }
  return os.str();
}

}  // namespace hipseg
