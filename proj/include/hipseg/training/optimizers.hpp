#pragma once

// SGD with momentum, Adam, and rectified Adam (RAdam) over Param<T> lists.

#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hipseg/network/tensor.hpp"

namespace hipseg {

enum class OptimizerKind { sgd, adam, radam };

inline std::string_view name_of(OptimizerKind k) noexcept {
  switch (k) {
    case OptimizerKind::sgd: return "sgd";
    case OptimizerKind::adam: return "adam";
    case OptimizerKind::radam: return "radam";
  }
  return "?";
}

inline OptimizerKind parse_optimizer(std::string_view s) {
  if (s == "sgd") return OptimizerKind::sgd;
  if (s == "adam") return OptimizerKind::adam;
  if (s == "radam") return OptimizerKind::radam;
  throw std::invalid_argument("unknown optimizer '" + std::string(s) + "' (sgd, adam, radam)");
}

inline constexpr double kSgdMomentum = 0.9;
inline constexpr double kBeta1 = 0.9;
inline constexpr double kBeta2 = 0.999;
inline constexpr double kAdamEpsilon = 1e-8;
inline constexpr double kRadamThreshold = 5.0;  // use the rectified step once rho_t >= this

template <typename T>
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, std::vector<nn::Param<T>*> params) : kind_(kind), params_(std::move(params)) {
    for (auto* p : params_) {
      m_.emplace_back(p->value.size(), 0.0);
      if (kind_ != OptimizerKind::sgd) v_.emplace_back(p->value.size(), 0.0);
    }
  }

  OptimizerKind kind() const noexcept { return kind_; }
  long steps() const noexcept { return t_; }

  void step(double lr) {
    ++t_;
    switch (kind_) {
      case OptimizerKind::sgd: sgd(lr); break;
      case OptimizerKind::adam: adam(lr, false); break;
      case OptimizerKind::radam: adam(lr, true); break;
    }
  }

 private:
  // v <- mu v + g ; w <- w - lr v
  void sgd(double lr) {
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        m[i] = kSgdMomentum * m[i] + static_cast<double>(p.grad[i]);
        p.value[i] = static_cast<T>(p.value[i] - lr * m[i]);
      }
    }
  }

  void adam(double lr, bool rectified) {
    const double t = static_cast<double>(t_);
    const double bc1 = 1.0 - std::pow(kBeta1, t);
    const double bc2 = 1.0 - std::pow(kBeta2, t);
    bool adaptive = true;
    double rect = 1.0;
    if (rectified) {
      const double rho_inf = 2.0 / (1.0 - kBeta2) - 1.0;
      const double b2t = std::pow(kBeta2, t);
      const double rho = rho_inf - 2.0 * t * b2t / (1.0 - b2t);
      adaptive = rho >= kRadamThreshold;
      if (adaptive) {
        rect = std::sqrt(((rho - 4.0) * (rho - 2.0) * rho_inf) / ((rho_inf - 4.0) * (rho_inf - 2.0) * rho));
      }
    }
    for (std::size_t k = 0; k < params_.size(); ++k) {
      auto& p = *params_[k];
      auto& m = m_[k];
      auto& v = v_[k];
      for (std::size_t i = 0; i < p.value.size(); ++i) {
        const double g = static_cast<double>(p.grad[i]);
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g;
        v[i] = kBeta2 * v[i] + (1.0 - kBeta2) * g * g;
        const double mhat = m[i] / bc1;
        double update;
        if (!adaptive) {
          update = mhat;  // un-adapted momentum step during warm-up
        } else if (rectified) {
          update = rect * mhat / (std::sqrt(v[i] / bc2) + kAdamEpsilon);
        } else {
          update = mhat / (std::sqrt(v[i] / bc2) + kAdamEpsilon);
        }
        p.value[i] = static_cast<T>(p.value[i] - lr * update);
      }
    }
  }

  OptimizerKind kind_;
  std::vector<nn::Param<T>*> params_;
  std::vector<std::vector<double>> m_, v_;
  long t_ = 0;
};

}  // namespace hipseg
