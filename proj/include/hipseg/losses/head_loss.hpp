#pragma once

// Losses evaluated on network head logits, with the chain rule through the
// sigmoid / softmax activation. Sums run over every pixel of the batch.

#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "hipseg/losses/boundary.hpp"
#include "hipseg/losses/dice.hpp"
#include "hipseg/network/unet.hpp"

namespace hipseg {

enum class LossKind { dice, gdl, boundary };

inline std::string_view name_of(LossKind k) noexcept {
  switch (k) {
    case LossKind::dice: return "dice";
    case LossKind::gdl: return "gdl";
    case LossKind::boundary: return "boundary";
  }
  return "?";
}

inline LossKind parse_loss(std::string_view s) {
  if (s == "dice") return LossKind::dice;
  if (s == "gdl") return LossKind::gdl;
  if (s == "boundary") return LossKind::boundary;
  throw std::invalid_argument("unknown loss '" + std::string(s) + "' (dice, gdl, boundary)");
}

inline void require_compatible(LossKind loss, nn::Head head) {
  if (loss != LossKind::dice && head != nn::Head::softmax2) {
    throw std::invalid_argument(std::string(name_of(loss)) + " loss needs the softmax-2ch head");
  }
}

template <typename T>
struct HeadLoss {
  double value = 0.0;
  double alpha = 1.0;
  nn::FeatureMap<T> dlogits;
  std::vector<T> foreground;  // activated foreground probability per pixel
};

// targets: one byte per pixel in batch-major order (b, y, x), matching the
// feature-map column order. phi is only read for the boundary loss.
template <typename T>
HeadLoss<T> head_loss(const nn::FeatureMap<T>& logits, nn::Head head, std::span<const std::uint8_t> targets,
                      LossKind kind, const BoundarySchedule& schedule = {}, std::span<const T> phi = {}) {
  require_compatible(kind, head);
  const std::size_t n = logits.columns();
  detail::require_same_size(targets.size(), n, "head_loss targets");
  HeadLoss<T> out;
  out.dlogits = nn::FeatureMap<T>(logits.channels, logits.batch, logits.height, logits.width);
  const nn::FeatureMap<T> p = nn::Network<T>::activate(logits, head);
  const int fg_channel = head == nn::Head::sigmoid ? 0 : 1;
  out.foreground.assign(p.row(fg_channel), p.row(fg_channel) + n);

  std::vector<T> g_fg(n), g_bg(n);
  for (std::size_t i = 0; i < n; ++i) {
    g_fg[i] = targets[i] ? T(1) : T(0);
    g_bg[i] = T(1) - g_fg[i];
  }
  std::vector<T> d_fg(n, T(0)), d_bg(n, T(0));

  if (kind == LossKind::dice) {
    out.value = static_cast<double>(dice_loss<T>(out.foreground, g_fg, d_fg));
  } else {
    const ChannelPair<T> pp{std::span<const T>(p.row(0), n), std::span<const T>(p.row(1), n)};
    const ChannelPair<T> gp{g_bg, g_fg};
    const ChannelGrad<T> gr{d_bg, d_fg};
    if (kind == LossKind::gdl) {
      out.value = static_cast<double>(generalized_dice_loss(pp, gp, gr));
    } else {
      detail::require_same_size(phi.size(), n, "boundary loss distance map");
      const BoundaryParts parts = boundary_loss(pp, gp, phi, schedule, gr);
      out.value = parts.value;
      out.alpha = parts.alpha;
    }
  }

  if (head == nn::Head::sigmoid) {
    T* dz = out.dlogits.row(0);
    for (std::size_t i = 0; i < n; ++i) {
      const T s = out.foreground[i];
      dz[i] = d_fg[i] * s * (T(1) - s);
    }
  } else {
    const T* p0 = p.row(0);
    const T* p1 = p.row(1);
    T* dz0 = out.dlogits.row(0);
    T* dz1 = out.dlogits.row(1);
    for (std::size_t i = 0; i < n; ++i) {
      const T s = p0[i] * d_bg[i] + p1[i] * d_fg[i];
      dz0[i] = p0[i] * (d_bg[i] - s);
      dz1[i] = p1[i] * (d_fg[i] - s);
    }
  }
  return out;
}

}  // namespace hipseg
