#pragma once

// Overlap losses over flattened probability maps.
//
// Dice:  D = 2 sum(p g) / (sum(p^2) + sum(g^2)), loss 1 - D.
// GDL:   1 - 2 sum_l w_l sum_i p_li g_li / sum_l w_l sum_i (p_li + g_li),
//        w_l = 1 / (sum_i g_li + eps)^2 over {background, foreground}.
//
// Gradient outputs are optional: pass empty spans to skip them.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>

namespace hipseg {

inline constexpr double kGdlEpsilon = 1e-6;

template <typename T>
struct ChannelPair {
  std::span<const T> background;
  std::span<const T> foreground;
};

template <typename T>
struct ChannelGrad {
  std::span<T> background;
  std::span<T> foreground;
};

namespace detail {

inline void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw std::invalid_argument(std::string(what) + ": size mismatch (" + std::to_string(a) + " vs " +
                                std::to_string(b) + ")");
  }
}

}  // namespace detail

// Both inputs identically zero counts as perfect agreement.
template <typename T>
T dice_coefficient(std::span<const T> p, std::span<const T> g) {
  detail::require_same_size(p.size(), g.size(), "dice_coefficient");
  T inter = 0, pp = 0, gg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p[i] * g[i];
    pp += p[i] * p[i];
    gg += g[i] * g[i];
  }
  const T denom = pp + gg;
  if (denom == T(0)) return T(1);
  return T(2) * inter / denom;
}

template <typename T>
T dice_loss(std::span<const T> p, std::span<const T> g, std::span<T> grad = {}) {
  detail::require_same_size(p.size(), g.size(), "dice_loss");
  T inter = 0, pp = 0, gg = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    inter += p[i] * g[i];
    pp += p[i] * p[i];
    gg += g[i] * g[i];
  }
  const T denom = pp + gg;
  if (!grad.empty()) detail::require_same_size(grad.size(), p.size(), "dice_loss gradient");
  if (denom == T(0)) {
    for (auto& v : grad) v = T(0);
    return T(0);
  }
  if (!grad.empty()) {
    // d/dp_i [1 - 2I/U] = -2 (g_i U - 2 p_i I) / U^2
    const T inv2 = T(1) / (denom * denom);
    for (std::size_t i = 0; i < p.size(); ++i) grad[i] = -T(2) * (g[i] * denom - T(2) * p[i] * inter) * inv2;
  }
  return T(1) - T(2) * inter / denom;
}

template <typename T>
void require_one_hot(const ChannelPair<T>& g) {
  detail::require_same_size(g.background.size(), g.foreground.size(), "one-hot target");
  for (std::size_t i = 0; i < g.foreground.size(); ++i) {
    const T b = g.background[i], f = g.foreground[i];
    const bool binary = (b == T(0) || b == T(1)) && (f == T(0) || f == T(1));
    if (!binary || b + f != T(1)) {
      throw std::invalid_argument("generalized_dice_loss: target is not one-hot at index " + std::to_string(i));
    }
  }
}

template <typename T>
T generalized_dice_loss(const ChannelPair<T>& p, const ChannelPair<T>& g, ChannelGrad<T> grad = {}) {
  detail::require_same_size(p.background.size(), p.foreground.size(), "generalized_dice_loss");
  detail::require_same_size(p.foreground.size(), g.foreground.size(), "generalized_dice_loss");
  require_one_hot(g);
  const std::span<const T> ps[2] = {p.background, p.foreground};
  const std::span<const T> gs[2] = {g.background, g.foreground};
  T weight[2], inter[2], total[2];
  for (int l = 0; l < 2; ++l) {
    T gsum = 0, pg = 0, psum = 0;
    for (std::size_t i = 0; i < ps[l].size(); ++i) {
      gsum += gs[l][i];
      pg += ps[l][i] * gs[l][i];
      psum += ps[l][i];
    }
    const T stabilized = gsum + T(kGdlEpsilon);
    weight[l] = T(1) / (stabilized * stabilized);
    inter[l] = pg;
    total[l] = psum + gsum;
  }
  const T num = weight[0] * inter[0] + weight[1] * inter[1];
  const T den = weight[0] * total[0] + weight[1] * total[1];
  if (den == T(0)) {
    for (auto& v : grad.background) v = T(0);
    for (auto& v : grad.foreground) v = T(0);
    return T(0);
  }
  const std::span<T> gr[2] = {grad.background, grad.foreground};
  for (int l = 0; l < 2; ++l) {
    if (gr[l].empty()) continue;
    detail::require_same_size(gr[l].size(), ps[l].size(), "generalized_dice_loss gradient");
    // d/dp_li [1 - 2 num/den] = -2 w_l (g_li den - num) / den^2
    const T scale = -T(2) * weight[l] / (den * den);
    for (std::size_t i = 0; i < ps[l].size(); ++i) gr[l][i] = scale * (gs[l][i] * den - num);
  }
  return T(1) - T(2) * num / den;
}

}  // namespace hipseg
