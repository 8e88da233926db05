#pragma once

// Minimal PNG charts: line curves (training/validation Dice per epoch) and
// box plots (per-arm Dice distributions). No text rendering; the matching CSV
// carries the numbers.

#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

namespace hipseg::plot {

using Rgb = std::array<std::uint8_t, 3>;

inline constexpr Rgb kPalette[] = {{31, 119, 180}, {255, 127, 14}, {44, 160, 44}, {214, 39, 40}, {148, 103, 189}};

class Canvas {
 public:
  Canvas(int width, int height) : w_(width), h_(height), px_(static_cast<std::size_t>(width) * height * 3, 255) {}

  int width() const noexcept { return w_; }
  int height() const noexcept { return h_; }

  void set(int x, int y, Rgb c) {
    if (x < 0 || y < 0 || x >= w_ || y >= h_) return;
    std::copy(c.begin(), c.end(), px_.begin() + (static_cast<std::ptrdiff_t>(y) * w_ + x) * 3);
  }
  Rgb get(int x, int y) const {
    const auto* p = px_.data() + (static_cast<std::size_t>(y) * w_ + x) * 3;
    return {p[0], p[1], p[2]};
  }

  void line(int x0, int y0, int x1, int y1, Rgb c, int thick = 1) {
    const int dx = std::abs(x1 - x0), dy = -std::abs(y1 - y0);
    const int sx = x0 < x1 ? 1 : -1, sy = y0 < y1 ? 1 : -1;
    int err = dx + dy;
    while (true) {
      for (int a = -(thick / 2); a <= thick / 2; ++a)
        for (int b = -(thick / 2); b <= thick / 2; ++b) set(x0 + a, y0 + b, c);
      if (x0 == x1 && y0 == y1) break;
      const int e2 = 2 * err;
      if (e2 >= dy) {
        err += dy;
        x0 += sx;
      }
      if (e2 <= dx) {
        err += dx;
        y0 += sy;
      }
    }
  }

  void rect(int x0, int y0, int x1, int y1, Rgb c) {
    line(x0, y0, x1, y0, c);
    line(x1, y0, x1, y1, c);
    line(x1, y1, x0, y1, c);
    line(x0, y1, x0, y0, c);
  }

  void fill(int x0, int y0, int x1, int y1, Rgb c) {
    for (int y = std::min(y0, y1); y <= std::max(y0, y1); ++y)
      for (int x = std::min(x0, x1); x <= std::max(x0, x1); ++x) set(x, y, c);
  }

  void save(const std::string& path) const {
    std::unique_ptr<FILE, int (*)(FILE*)> f(std::fopen(path.c_str(), "wb"), &std::fclose);
    if (!f) throw std::runtime_error("cannot write " + path);
    png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
    png_infop info = png ? png_create_info_struct(png) : nullptr;
    if (!png || !info) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng initialisation failed");
    }
    if (setjmp(png_jmpbuf(png))) {
      png_destroy_write_struct(&png, &info);
      throw std::runtime_error("libpng failed writing " + path);
    }
    png_init_io(png, f.get());
    png_set_IHDR(png, info, static_cast<png_uint_32>(w_), static_cast<png_uint_32>(h_), 8, PNG_COLOR_TYPE_RGB,
                 PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
    png_write_info(png, info);
    for (int y = 0; y < h_; ++y) png_write_row(png, px_.data() + static_cast<std::size_t>(y) * w_ * 3);
    png_write_end(png, nullptr);
    png_destroy_write_struct(&png, &info);
  }

 private:
  int w_, h_;
  std::vector<std::uint8_t> px_;
};

struct Frame {
  int left = 40, right = 15, top = 15, bottom = 30;
  double y_lo = 0.0, y_hi = 1.0;
};

inline void draw_axes(Canvas& c, const Frame& f) {
  const Rgb axis{0, 0, 0}, grid{225, 225, 225};
  const int x0 = f.left, x1 = c.width() - f.right, y0 = f.top, y1 = c.height() - f.bottom;
  for (int k = 0; k <= 10; ++k) {
    const int y = y1 - (y1 - y0) * k / 10;
    c.line(x0 + 1, y, x1, y, grid);
    c.line(x0 - 4, y, x0, y, axis);
  }
  c.line(x0, y0, x0, y1, axis);
  c.line(x0, y1, x1, y1, axis);
}

// Each series is drawn over x = 0..n-1 with its own colour.
inline void line_plot(const std::string& path, const std::vector<std::vector<double>>& series, int width = 640,
                      int height = 400) {
  Canvas c(width, height);
  Frame f;
  draw_axes(c, f);
  std::size_t n = 0;
  for (const auto& s : series) n = std::max(n, s.size());
  const int x0 = f.left, x1 = width - f.right, y0 = f.top, y1 = height - f.bottom;
  auto px = [&](std::size_t i) { return n <= 1 ? x0 : x0 + static_cast<int>(std::lround((x1 - x0) * static_cast<double>(i) / (n - 1))); };
  auto py = [&](double v) {
    const double t = std::clamp((v - f.y_lo) / (f.y_hi - f.y_lo), 0.0, 1.0);
    return y1 - static_cast<int>(std::lround((y1 - y0) * t));
  };
  for (std::size_t s = 0; s < series.size(); ++s) {
    const Rgb col = kPalette[s % std::size(kPalette)];
    const auto& v = series[s];
    for (std::size_t i = 0; i + 1 < v.size(); ++i) c.line(px(i), py(v[i]), px(i + 1), py(v[i + 1]), col, 2);
    if (v.size() == 1) c.fill(px(0) - 2, py(v[0]) - 2, px(0) + 2, py(v[0]) + 2, col);
  }
  c.save(path);
}

inline double quantile(std::vector<double> v, double q) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

// One box (quartiles, median, min/max whiskers) per group; y range fitted to the data.
inline void box_plot(const std::string& path, const std::vector<std::vector<double>>& groups, int width = 640,
                     int height = 400) {
  Canvas c(width, height);
  Frame f;
  double lo = 1.0, hi = 0.0;
  for (const auto& g : groups)
    for (double v : g) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    }
  if (hi < lo) {
    lo = 0.0;
    hi = 1.0;
  }
  const double pad = std::max(0.02, 0.1 * (hi - lo));
  f.y_lo = std::max(0.0, lo - pad);
  f.y_hi = std::min(1.0, hi + pad);
  if (f.y_hi <= f.y_lo) f.y_hi = f.y_lo + 0.05;
  draw_axes(c, f);
  const int x0 = f.left, x1 = width - f.right, y0 = f.top, y1 = height - f.bottom;
  auto py = [&](double v) {
    const double t = std::clamp((v - f.y_lo) / (f.y_hi - f.y_lo), 0.0, 1.0);
    return y1 - static_cast<int>(std::lround((y1 - y0) * t));
  };
  const int slot = groups.empty() ? 1 : (x1 - x0) / static_cast<int>(groups.size());
  for (std::size_t g = 0; g < groups.size(); ++g) {
    if (groups[g].empty()) continue;
    const Rgb col = kPalette[g % std::size(kPalette)];
    const int cx = x0 + slot * static_cast<int>(g) + slot / 2, half = slot / 4;
    const double q1 = quantile(groups[g], 0.25), med = quantile(groups[g], 0.5), q3 = quantile(groups[g], 0.75);
    const double mn = quantile(groups[g], 0.0), mx = quantile(groups[g], 1.0);
    c.line(cx, py(mn), cx, py(q1), col);
    c.line(cx, py(q3), cx, py(mx), col);
    c.line(cx - half / 2, py(mn), cx + half / 2, py(mn), col);
    c.line(cx - half / 2, py(mx), cx + half / 2, py(mx), col);
    c.rect(cx - half, py(q3), cx + half, py(q1), col);
    c.line(cx - half, py(med), cx + half, py(med), col, 3);
  }
  c.save(path);
}

}  // namespace hipseg::plot
