#pragma once

// Epoch loop with a step learning-rate schedule, patience early stopping and
// best-validation snapshots. The per-epoch work is injected, so the loop's
// bookkeeping can be driven by synthetic validation sequences.
//
// Epoch indices passed to callbacks are 0-based; TrainReport numbers epochs
// from 1 (epoch 1 is the first one run).

#include <cmath>
#include <functional>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace hipseg {

struct LrSchedule {
  double initial = 0.001;
  double factor = 0.1;
  int step_epoch = 250;  // 0-based epoch index from which factor applies

  double lr(int epoch) const { return epoch >= step_epoch ? initial * factor : initial; }
};

enum class StopReason { patience, max_epochs, diverged };

inline std::string_view name_of(StopReason r) noexcept {
  switch (r) {
    case StopReason::patience: return "patience";
    case StopReason::max_epochs: return "max_epochs";
    case StopReason::diverged: return "diverged";
  }
  return "?";
}

// Improvement means strictly greater than the best so far.
class EarlyStopping {
 public:
  explicit EarlyStopping(int patience) : patience_(patience) {}

  // Returns true when the value is a new best.
  bool update(double value) {
    if (!best_ || value > *best_) {
      best_ = value;
      stale_ = 0;
      return true;
    }
    ++stale_;
    return false;
  }
  bool should_stop() const noexcept { return stale_ >= patience_; }
  int stale_epochs() const noexcept { return stale_; }
  double best() const noexcept { return best_.value_or(0.0); }

 private:
  int patience_;
  int stale_ = 0;
  std::optional<double> best_;
};

struct EpochStats {
  double train_loss = 0.0;
  double train_dice = 0.0;
  double alpha = 1.0;
  bool diverged = false;
  std::string diagnostic;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double lr = 0.0;
  double alpha = 1.0;
  double train_loss = 0.0;
  double train_dice = 0.0;
  double val_dice = 0.0;
};

struct TrainReport {
  std::string orientation;
  std::vector<EpochRecord> epochs;
  int best_epoch = 0;  // 1-based, 0 if no epoch completed
  double best_val_dice = 0.0;
  StopReason stop_reason = StopReason::max_epochs;
  std::string diagnostic;
  double seconds = 0.0;

  bool failed() const noexcept { return stop_reason == StopReason::diverged; }
};

inline nlohmann::json to_json(const TrainReport& r) {
  nlohmann::json j;
  j["orientation"] = r.orientation;
  j["best_epoch"] = r.best_epoch;
  j["best_val_dice"] = r.best_val_dice;
  j["stop_reason"] = std::string(name_of(r.stop_reason));
  j["diagnostic"] = r.diagnostic;
  j["seconds"] = r.seconds;
  j["epochs"] = nlohmann::json::array();
  for (const auto& e : r.epochs) {
    j["epochs"].push_back({{"epoch", e.epoch}, {"lr", e.lr}, {"alpha", e.alpha}, {"train_loss", e.train_loss},
                           {"train_dice", e.train_dice}, {"val_dice", e.val_dice}});
  }
  return j;
}

inline std::string curves_csv(const TrainReport& r) {
  std::ostringstream os;
  os.precision(10);
  os << "epoch,lr,alpha,train_loss,train_dice,val_dice\n";
  for (const auto& e : r.epochs) {
    os << e.epoch << ',' << e.lr << ',' << e.alpha << ',' << e.train_loss << ',' << e.train_dice << ',' << e.val_dice
       << '\n';
  }
  return os.str();
}

struct LoopConfig {
  LrSchedule schedule;
  int max_epochs = 1000;
  int patience = 200;
};

inline void require_valid(const LoopConfig& c) {
  if (c.max_epochs < 1) throw std::invalid_argument("max_epochs must be >= 1");
  if (c.patience < 1) throw std::invalid_argument("patience must be >= 1");
  if (c.patience >= c.max_epochs) throw std::invalid_argument("patience must be smaller than max_epochs");
  if (!(c.schedule.initial > 0.0)) throw std::invalid_argument("initial learning rate must be > 0");
}

struct LoopHooks {
  std::function<EpochStats(int epoch, double lr)> train_epoch;
  std::function<double(int epoch)> validate;
  std::function<void(int epoch, double val_dice)> snapshot;  // called on every new best
  std::function<void(const EpochRecord&)> on_epoch;          // progress, optional
};

inline TrainReport run_training_loop(const LoopConfig& config, const LoopHooks& hooks) {
  require_valid(config);
  TrainReport report;
  EarlyStopping stopper(config.patience);
  for (int e = 0; e < config.max_epochs; ++e) {
    const double lr = config.schedule.lr(e);
    const EpochStats stats = hooks.train_epoch ? hooks.train_epoch(e, lr) : EpochStats{};
    if (stats.diverged || !std::isfinite(stats.train_loss)) {
      report.stop_reason = StopReason::diverged;
      report.diagnostic = "epoch " + std::to_string(e + 1) + ": " +
                          (stats.diagnostic.empty() ? std::string("non-finite training loss") : stats.diagnostic);
      return report;
    }
    EpochRecord rec;
    rec.epoch = e + 1;
    rec.lr = lr;
    rec.alpha = stats.alpha;
    rec.train_loss = stats.train_loss;
    rec.train_dice = stats.train_dice;
    rec.val_dice = hooks.validate(e);
    report.epochs.push_back(rec);
    if (stopper.update(rec.val_dice)) {
      report.best_epoch = rec.epoch;
      report.best_val_dice = rec.val_dice;
      if (hooks.snapshot) hooks.snapshot(e, rec.val_dice);
    }
    if (hooks.on_epoch) hooks.on_epoch(rec);
    if (stopper.should_stop()) {
      report.stop_reason = StopReason::patience;
      return report;
    }
  }
  report.stop_reason = StopReason::max_epochs;
  return report;
}

}  // namespace hipseg
