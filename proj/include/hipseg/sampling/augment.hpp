#pragma once

// Runtime patch augmentation: rotation + isotropic scale about the patch
// centre (bilinear for inputs, nearest for the target), a global intensity
// shift clamped to [0, 1], then additive Gaussian noise on the inputs only.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numbers>
#include <span>

#include "hipseg/common/grid.hpp"
#include "hipseg/common/random.hpp"

namespace hipseg {

struct AugmentConfig {
  bool enabled = true;
  double intensity_shift = 0.05;  // shift ~ U(-s, s)
  double rotation_degrees = 10.0; // angle ~ U(-r, r)
  double scale_percent = 10.0;    // factor ~ 1 + U(-p, p) / 100
  double noise_mean = 0.0;
  double noise_variance = 0.0002;
};

struct AugmentDraw {
  double angle_degrees = 0.0;
  double scale = 1.0;
  double shift = 0.0;
};

inline void add_gaussian_noise(std::span<float> values, double mean, double variance, Rng& rng) {
  if (variance <= 0.0 && mean == 0.0) return;
  std::normal_distribution<double> dist(mean, std::sqrt(std::max(variance, 0.0)));
  for (auto& v : values) v = static_cast<float>(v + dist(rng));
}

namespace detail {

inline float bilinear(std::span<const float> plane, int rows, int cols, double y, double x) {
  const int y0 = static_cast<int>(std::floor(y));
  const int x0 = static_cast<int>(std::floor(x));
  const double fy = y - y0, fx = x - x0;
  auto at = [&](int r, int c) -> double {
    if (r < 0 || c < 0 || r >= rows || c >= cols) return 0.0;
    return plane[static_cast<std::size_t>(r) * cols + c];
  };
  return static_cast<float>((1 - fy) * ((1 - fx) * at(y0, x0) + fx * at(y0, x0 + 1)) +
                            fy * ((1 - fx) * at(y0 + 1, x0) + fx * at(y0 + 1, x0 + 1)));
}

}  // namespace detail

// Resamples every input channel and the target through the same similarity transform.
inline void warp_patch(Planes<float>& input, Image2D<std::uint8_t>& target, double angle_degrees, double scale) {
  const int rows = input.rows(), cols = input.cols();
  const double cy = (rows - 1) / 2.0, cx = (cols - 1) / 2.0;
  const double a = angle_degrees * std::numbers::pi / 180.0;
  const double ca = std::cos(a) / scale, sa = std::sin(a) / scale;
  Planes<float> out_in(input.channels(), rows, cols, 0.0f);
  Image2D<std::uint8_t> out_t(1, rows, cols, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      // inverse map: output pixel -> source location
      const double dy = r - cy, dx = c - cx;
      const double sy = cy + ca * dy - sa * dx;
      const double sx = cx + sa * dy + ca * dx;
      for (int ch = 0; ch < input.channels(); ++ch) out_in(ch, r, c) = detail::bilinear(input.channel(ch), rows, cols, sy, sx);
      const int ny = static_cast<int>(std::lround(sy)), nx = static_cast<int>(std::lround(sx));
      if (ny >= 0 && nx >= 0 && ny < rows && nx < cols) out_t(0, r, c) = target(0, ny, nx);
    }
  input = std::move(out_in);
  target = std::move(out_t);
}

inline AugmentDraw augment_patch(Planes<float>& input, Image2D<std::uint8_t>& target, const AugmentConfig& config,
                                 Rng& rng) {
  AugmentDraw draw;
  if (!config.enabled) return draw;
  draw.angle_degrees = uniform(rng, -config.rotation_degrees, config.rotation_degrees);
  draw.scale = 1.0 + uniform(rng, -config.scale_percent, config.scale_percent) / 100.0;
  draw.shift = uniform(rng, -config.intensity_shift, config.intensity_shift);
  if (draw.angle_degrees != 0.0 || draw.scale != 1.0) warp_patch(input, target, draw.angle_degrees, draw.scale);
  for (auto& v : input.values()) v = std::clamp(static_cast<float>(v + draw.shift), 0.0f, 1.0f);
  add_gaussian_noise(input.values(), config.noise_mean, config.noise_variance, rng);
  return draw;
}

}  // namespace hipseg
