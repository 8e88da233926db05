#pragma once

// 3D connected-component labeling (two raster passes with union-find) and
// removal of everything but the largest components.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "hipseg/volumes/volume.hpp"

namespace hipseg {

enum class Connectivity : int { six = 6, twenty_six = 26 };

inline Connectivity parse_connectivity(int n) {
  if (n == 6) return Connectivity::six;
  if (n == 26) return Connectivity::twenty_six;
  throw std::invalid_argument("connectivity must be 6 or 26, got " + std::to_string(n));
}

struct ComponentSet {
  Grid3<std::uint32_t> labels;      // 0 = background, 1..K in raster order of first voxel
  std::vector<std::size_t> sizes;   // sizes[k - 1] is the voxel count of label k
  Connectivity connectivity = Connectivity::twenty_six;

  std::size_t count() const noexcept { return sizes.size(); }

  // Labels ordered by size, largest first; equal sizes keep the smaller label first.
  std::vector<std::uint32_t> labels_by_size() const {
    std::vector<std::uint32_t> order(sizes.size());
    std::iota(order.begin(), order.end(), 1u);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::uint32_t a, std::uint32_t b) { return sizes[a - 1] > sizes[b - 1]; });
    return order;
  }
};

namespace detail {

class DisjointSet {
 public:
  std::uint32_t make() {
    parent_.push_back(static_cast<std::uint32_t>(parent_.size()));
    return parent_.back();
  }
  std::uint32_t find(std::uint32_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }
  void unite(std::uint32_t a, std::uint32_t b) {
    a = find(a);
    b = find(b);
    if (a == b) return;
    if (a < b) parent_[b] = a; else parent_[a] = b;
  }
  std::size_t size() const noexcept { return parent_.size(); }

 private:
  std::vector<std::uint32_t> parent_;
};

// Neighbour offsets that precede a voxel in raster order (axis 0 fastest).
inline std::vector<Index3> backward_offsets(Connectivity c) {
  if (c == Connectivity::six) return {{-1, 0, 0}, {0, -1, 0}, {0, 0, -1}};
  std::vector<Index3> out;
  for (int dk = -1; dk <= 0; ++dk)
    for (int dj = -1; dj <= 1; ++dj)
      for (int di = -1; di <= 1; ++di) {
        if (dk == 0 && (dj > 0 || (dj == 0 && di >= 0))) continue;
        out.push_back({di, dj, dk});
      }
  return out;
}

}  // namespace detail

inline ComponentSet label_components(const LabelMask& mask, Connectivity connectivity = Connectivity::twenty_six) {
  const Extent3 e = mask.extent();
  ComponentSet out;
  out.connectivity = connectivity;
  out.labels = Grid3<std::uint32_t>(e, 0u);
  const auto offsets = detail::backward_offsets(connectivity);

  // Provisional labels are 1-based; entry 0 of the disjoint set is unused.
  detail::DisjointSet sets;
  sets.make();
  for (int k = 0; k < e[2]; ++k)
    for (int j = 0; j < e[1]; ++j)
      for (int i = 0; i < e[0]; ++i) {
        if (!mask.data(i, j, k)) continue;
        std::uint32_t label = 0;
        for (const auto& d : offsets) {
          const int ni = i + d[0], nj = j + d[1], nk = k + d[2];
          if (!mask.data.contains(ni, nj, nk)) continue;
          const std::uint32_t n = out.labels(ni, nj, nk);
          if (n == 0) continue;
          if (label == 0) label = n; else sets.unite(label, n);
        }
        if (label == 0) label = sets.make();
        out.labels(i, j, k) = label;
      }

  std::vector<std::uint32_t> remap(sets.size(), 0);
  std::uint32_t next = 0;
  for (auto& v : out.labels.values()) {
    if (v == 0) continue;
    const std::uint32_t root = sets.find(v);
    if (remap[root] == 0) {
      remap[root] = ++next;
      out.sizes.push_back(0);
    }
    v = remap[root];
    ++out.sizes[v - 1];
  }
  return out;
}

// Keeps the n_max largest components (ties: lower label wins).
inline LabelMask keep_largest(const ComponentSet& components, std::size_t n_max = 2) {
  std::vector<std::uint8_t> keep(components.count() + 1, 0);
  const auto order = components.labels_by_size();
  for (std::size_t r = 0; r < std::min(n_max, order.size()); ++r) keep[order[r]] = 1;
  LabelMask out(components.labels.extent());
  auto src = components.labels.values();
  auto dst = out.data.values();
  for (std::size_t i = 0; i < src.size(); ++i) dst[i] = keep[src[i]];
  return out;
}

inline LabelMask keep_largest(const LabelMask& mask, std::size_t n_max = 2,
                              Connectivity connectivity = Connectivity::twenty_six) {
  return keep_largest(label_components(mask, connectivity), n_max);
}

}  // namespace hipseg
