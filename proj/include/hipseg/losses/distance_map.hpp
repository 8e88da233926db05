#pragma once

// Signed Euclidean distance to the ground-truth boundary of a 2D target.
//
// Boundary pixels are foreground pixels with a 4-neighbour background pixel
// inside the image; they get phi == 0. Every other pixel gets the exact
// Euclidean distance to the nearest boundary pixel, negated inside the
// foreground. Exact squared distances come from the separable lower-envelope
// transform of Felzenszwalb & Huttenlocher.
//
// A target with no boundary (all background or all foreground) has no
// surface to measure from; phi then holds the distance to the image border
// (1 for the outermost ring), signed by class, and `degenerate` is set.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "hipseg/common/grid.hpp"

namespace hipseg {

struct DistanceMap {
  Image2D<double> phi;
  bool degenerate = false;
};

namespace detail {

// 1D squared distance transform restricted to finite samples of f.
inline void squared_edt_1d(const std::vector<double>& f, std::vector<double>& d) {
  const int n = static_cast<int>(f.size());
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<int> v;
  std::vector<double> z;
  v.reserve(static_cast<std::size_t>(n));
  z.reserve(static_cast<std::size_t>(n) + 1);
  for (int q = 0; q < n; ++q) {
    if (!std::isfinite(f[static_cast<std::size_t>(q)])) continue;
    const double fq = f[static_cast<std::size_t>(q)] + static_cast<double>(q) * q;
    while (!v.empty()) {
      const int p = v.back();
      const double s = (fq - (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) / (2.0 * (q - p));
      if (s <= z.back()) {
        v.pop_back();
        z.pop_back();
      } else {
        break;
      }
    }
    if (v.empty()) {
      v.push_back(q);
      z.assign(1, -inf);
    } else {
      const int p = v.back();
      z.push_back((fq - (f[static_cast<std::size_t>(p)] + static_cast<double>(p) * p)) / (2.0 * (q - p)));
      v.push_back(q);
    }
  }
  d.assign(static_cast<std::size_t>(n), inf);
  if (v.empty()) return;
  z.push_back(inf);
  std::size_t k = 0;
  for (int q = 0; q < n; ++q) {
    while (z[k + 1] < q) ++k;
    const int p = v[k];
    d[static_cast<std::size_t>(q)] = static_cast<double>(q - p) * (q - p) + f[static_cast<std::size_t>(p)];
  }
}

}  // namespace detail

inline Image2D<std::uint8_t> boundary_pixels(const Image2D<std::uint8_t>& g) {
  const int rows = g.rows(), cols = g.cols();
  Image2D<std::uint8_t> b(1, rows, cols, 0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!g(0, r, c)) continue;
      const bool touches = (r > 0 && !g(0, r - 1, c)) || (r + 1 < rows && !g(0, r + 1, c)) ||
                           (c > 0 && !g(0, r, c - 1)) || (c + 1 < cols && !g(0, r, c + 1));
      b(0, r, c) = touches ? 1 : 0;
    }
  return b;
}

inline DistanceMap signed_distance_map(const Image2D<std::uint8_t>& g) {
  const int rows = g.rows(), cols = g.cols();
  DistanceMap out;
  out.phi = Image2D<double>(1, rows, cols, 0.0);
  const Image2D<std::uint8_t> boundary = boundary_pixels(g);
  const bool any_boundary = std::any_of(boundary.values().begin(), boundary.values().end(), [](auto v) { return v; });

  if (!any_boundary) {
    out.degenerate = true;
    for (int r = 0; r < rows; ++r)
      for (int c = 0; c < cols; ++c) {
        const double border = std::min({r + 1, c + 1, rows - r, cols - c});
        out.phi(0, r, c) = g(0, r, c) ? -border : border;
      }
    return out;
  }

  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> sq(static_cast<std::size_t>(rows) * cols);
  std::vector<double> f, d;
  // Columns first, then rows.
  f.resize(static_cast<std::size_t>(rows));
  for (int c = 0; c < cols; ++c) {
    for (int r = 0; r < rows; ++r) f[static_cast<std::size_t>(r)] = boundary(0, r, c) ? 0.0 : inf;
    detail::squared_edt_1d(f, d);
    for (int r = 0; r < rows; ++r) sq[static_cast<std::size_t>(r) * cols + c] = d[static_cast<std::size_t>(r)];
  }
  f.resize(static_cast<std::size_t>(cols));
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) f[static_cast<std::size_t>(c)] = sq[static_cast<std::size_t>(r) * cols + c];
    detail::squared_edt_1d(f, d);
    for (int c = 0; c < cols; ++c) {
      const double dist = std::sqrt(d[static_cast<std::size_t>(c)]);
      out.phi(0, r, c) = g(0, r, c) ? -dist : dist;
    }
  }
  // Boundary pixels are exactly zero (avoid -0.0).
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c)
      if (boundary(0, r, c)) out.phi(0, r, c) = 0.0;
  return out;
}

}  // namespace hipseg
