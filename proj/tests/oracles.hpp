#pragma once

// Brute-force reference implementations used as test oracles. Deliberately
// naive: plain loops, no shared code with the library under test.

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <queue>
#include <vector>

namespace oracle {

// Component labels by BFS flood fill; returns component sizes in discovery order
// (scan order x fastest) and writes a label per voxel (0 = background).
inline std::vector<std::size_t> flood_fill(const std::vector<std::uint8_t>& v, int X, int Y, int Z, int connectivity,
                                           std::vector<int>* labels_out = nullptr) {
  std::vector<int> labels(v.size(), 0);
  std::vector<std::size_t> sizes;
  auto idx = [&](int x, int y, int z) { return (static_cast<std::size_t>(z) * Y + y) * X + x; };
  for (int z = 0; z < Z; ++z)
    for (int y = 0; y < Y; ++y)
      for (int x = 0; x < X; ++x) {
        if (!v[idx(x, y, z)] || labels[idx(x, y, z)]) continue;
        const int label = static_cast<int>(sizes.size()) + 1;
        std::size_t count = 0;
        std::queue<std::array<int, 3>> q;
        q.push({x, y, z});
        labels[idx(x, y, z)] = label;
        while (!q.empty()) {
          const auto [a, b, c] = q.front();
          q.pop();
          ++count;
          for (int dz = -1; dz <= 1; ++dz)
            for (int dy = -1; dy <= 1; ++dy)
              for (int dx = -1; dx <= 1; ++dx) {
                const int manhattan = std::abs(dx) + std::abs(dy) + std::abs(dz);
                if (manhattan == 0) continue;
                if (connectivity == 6 && manhattan != 1) continue;
                const int na = a + dx, nb = b + dy, nc = c + dz;
                if (na < 0 || nb < 0 || nc < 0 || na >= X || nb >= Y || nc >= Z) continue;
                const std::size_t n = idx(na, nb, nc);
                if (v[n] && !labels[n]) {
                  labels[n] = label;
                  q.push({na, nb, nc});
                }
              }
        }
        sizes.push_back(count);
      }
  if (labels_out) *labels_out = std::move(labels);
  return sizes;
}

// Dice by direct counting; 1 when both are empty.
inline double dice(const std::vector<std::uint8_t>& a, const std::vector<std::uint8_t>& b) {
  long double inter = 0, sa = 0, sb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    inter += (a[i] && b[i]) ? 1 : 0;
    sa += a[i] ? 1 : 0;
    sb += b[i] ? 1 : 0;
  }
  if (sa + sb == 0) return 1.0;
  return static_cast<double>(2 * inter / (sa + sb));
}

// Signed distance to the nearest boundary pixel by exhaustive search.
// Boundary = foreground pixel with a 4-neighbour background pixel inside the image.
inline std::vector<double> signed_distance(const std::vector<std::uint8_t>& g, int rows, int cols, bool* has_boundary) {
  auto at = [&](int r, int c) { return g[static_cast<std::size_t>(r) * cols + c]; };
  std::vector<std::array<int, 2>> boundary;
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      if (!at(r, c)) continue;
      bool edge = false;
      if (r > 0 && !at(r - 1, c)) edge = true;
      if (r + 1 < rows && !at(r + 1, c)) edge = true;
      if (c > 0 && !at(r, c - 1)) edge = true;
      if (c + 1 < cols && !at(r, c + 1)) edge = true;
      if (edge) boundary.push_back({r, c});
    }
  *has_boundary = !boundary.empty();
  std::vector<double> phi(g.size(), 0.0);
  for (int r = 0; r < rows; ++r)
    for (int c = 0; c < cols; ++c) {
      double best = std::numeric_limits<double>::infinity();
      for (const auto& b : boundary) {
        const double d = std::sqrt(static_cast<double>((r - b[0]) * (r - b[0]) + (c - b[1]) * (c - b[1])));
        if (d < best) best = d;
      }
      phi[static_cast<std::size_t>(r) * cols + c] = at(r, c) ? -best : best;
      if (best == 0.0) phi[static_cast<std::size_t>(r) * cols + c] = 0.0;
    }
  return phi;
}

}  // namespace oracle
