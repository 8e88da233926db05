#pragma once

// Boundary loss: B = alpha * GDL + (1 - alpha) * S, where the surface term
// S = mean_i phi_i * p_fg,i uses the signed distance map of the target and
// alpha falls linearly from 1 at the first epoch to 0 at the last one.

#include <algorithm>
#include <span>
#include <stdexcept>
#include <vector>

#include "hipseg/losses/dice.hpp"

namespace hipseg {

struct BoundarySchedule {
  int epoch = 0;       // 0-based
  int max_epochs = 1;  // horizon E

  double alpha() const {
    if (max_epochs <= 1) return 1.0;
    return std::clamp(1.0 - static_cast<double>(epoch) / static_cast<double>(max_epochs - 1), 0.0, 1.0);
  }
};

inline void require_valid(const BoundarySchedule& s) {
  if (s.max_epochs < 1 || s.epoch < 0) throw std::invalid_argument("boundary schedule needs epoch >= 0 and max_epochs >= 1");
}

template <typename T>
T surface_term(std::span<const T> p_fg, std::span<const T> phi, std::span<T> grad = {}) {
  detail::require_same_size(p_fg.size(), phi.size(), "surface_term");
  if (p_fg.empty()) return T(0);
  const T inv_n = T(1) / static_cast<T>(p_fg.size());
  T sum = 0;
  for (std::size_t i = 0; i < p_fg.size(); ++i) sum += phi[i] * p_fg[i];
  if (!grad.empty()) {
    detail::require_same_size(grad.size(), p_fg.size(), "surface_term gradient");
    for (std::size_t i = 0; i < p_fg.size(); ++i) grad[i] = phi[i] * inv_n;
  }
  return sum * inv_n;
}

struct BoundaryParts {
  double alpha = 1.0;
  double regional = 0.0;  // GDL
  double surface = 0.0;   // S
  double value = 0.0;
};

template <typename T>
BoundaryParts boundary_loss(const ChannelPair<T>& p, const ChannelPair<T>& g, std::span<const T> phi,
                            const BoundarySchedule& schedule, ChannelGrad<T> grad = {}) {
  require_valid(schedule);
  const T alpha = static_cast<T>(schedule.alpha());
  BoundaryParts parts;
  parts.alpha = static_cast<double>(alpha);
  const T regional = generalized_dice_loss(p, g, grad);
  std::vector<T> surface_grad(grad.foreground.empty() ? 0 : p.foreground.size());
  const T surface = surface_term<T>(p.foreground, phi, surface_grad);
  for (auto& v : grad.background) v *= alpha;
  for (std::size_t i = 0; i < grad.foreground.size(); ++i) {
    grad.foreground[i] = alpha * grad.foreground[i] + (T(1) - alpha) * surface_grad[i];
  }
  parts.regional = static_cast<double>(regional);
  parts.surface = static_cast<double>(surface);
  parts.value = static_cast<double>(alpha * regional + (T(1) - alpha) * surface);
  return parts;
}

}  // namespace hipseg
