#pragma once

// Axis canonicalization from orientation metadata: a permutation plus
// per-axis flips that bring any axis-aligned volume to RAS order, so that
// slicing axis 0/1/2 yields sagittal/coronal/axial planes. Registration is
// out of scope; only exact index reshuffles happen here.

#include <array>
#include <optional>
#include <stdexcept>
#include <string>

#include "hipseg/volumes/volume.hpp"

namespace hipseg {

namespace detail {

// 0 for R/L, 1 for A/P, 2 for S/I.
inline int anatomical_axis(char letter) {
  switch (letter) {
    case 'R': case 'L': return 0;
    case 'A': case 'P': return 1;
    case 'S': case 'I': return 2;
    default: throw std::invalid_argument(std::string("invalid axis letter '") + letter + "'");
  }
}

inline bool is_negative_direction(char letter) { return letter == 'L' || letter == 'P' || letter == 'I'; }

}  // namespace detail

struct CanonicalTransform {
  std::array<int, 3> source_axis{0, 1, 2};  // canonical axis c was source axis source_axis[c]
  std::array<bool, 3> flipped{false, false, false};
  Extent3 source_extent{1, 1, 1};
  AxisCode source_axes;

  bool is_identity() const noexcept {
    return source_axis == std::array<int, 3>{0, 1, 2} && flipped == std::array<bool, 3>{false, false, false};
  }

  Extent3 canonical_extent() const noexcept {
    return {source_extent[source_axis[0]], source_extent[source_axis[1]], source_extent[source_axis[2]]};
  }

  static CanonicalTransform from_axes(const AxisCode& axes, const Extent3& extent, const std::string& source) {
    CanonicalTransform t;
    t.source_extent = extent;
    t.source_axes = axes;
    std::array<int, 3> seen{-1, -1, -1};
    for (int i = 0; i < 3; ++i) {
      const char letter = axes.letters[static_cast<std::size_t>(i)];
      const int c = detail::anatomical_axis(letter);
      if (seen[static_cast<std::size_t>(c)] >= 0) {
        throw std::runtime_error("ambiguous orientation '" + axes.str() + "' in " +
                                 (source.empty() ? std::string("<memory>") : source) +
                                 ": two array axes map to the same anatomical axis");
      }
      seen[static_cast<std::size_t>(c)] = i;
      t.source_axis[static_cast<std::size_t>(c)] = i;
      t.flipped[static_cast<std::size_t>(c)] = detail::is_negative_direction(letter);
    }
    return t;
  }

  template <typename T>
  Grid3<T> apply(const Grid3<T>& in) const {
    require_same_extent(in.extent(), source_extent, "canonical transform");
    Grid3<T> out(canonical_extent());
    const Extent3 ce = out.extent();
    Index3 q{};
    for (int k = 0; k < ce[2]; ++k) {
      for (int j = 0; j < ce[1]; ++j) {
        for (int i = 0; i < ce[0]; ++i) {
          const Index3 p{i, j, k};
          for (std::size_t c = 0; c < 3; ++c) {
            q[static_cast<std::size_t>(source_axis[c])] = flipped[c] ? ce[c] - 1 - p[c] : p[c];
          }
          out(i, j, k) = in(q[0], q[1], q[2]);
        }
      }
    }
    return out;
  }

  template <typename T>
  Grid3<T> invert(const Grid3<T>& canonical) const {
    require_same_extent(canonical.extent(), canonical_extent(), "inverse canonical transform");
    Grid3<T> out(source_extent);
    const Extent3 ce = canonical.extent();
    Index3 p{};
    for (int k = 0; k < source_extent[2]; ++k) {
      for (int j = 0; j < source_extent[1]; ++j) {
        for (int i = 0; i < source_extent[0]; ++i) {
          const Index3 q{i, j, k};
          for (std::size_t c = 0; c < 3; ++c) {
            const int v = q[static_cast<std::size_t>(source_axis[c])];
            p[c] = flipped[c] ? ce[c] - 1 - v : v;
          }
          out(i, j, k) = canonical(p[0], p[1], p[2]);
        }
      }
    }
    return out;
  }
};

struct CanonicalResult {
  Volume volume;
  std::optional<LabelMask> mask;
  CanonicalTransform transform;
};

inline CanonicalResult to_canonical(const Volume& volume, const std::optional<LabelMask>& mask = std::nullopt) {
  if (!volume.axes) {
    std::string msg = "missing orientation metadata in " + (volume.source.empty() ? std::string("<memory>") : volume.source);
    if (!volume.orientation_issue.empty()) msg += ": " + volume.orientation_issue;
    throw std::runtime_error(msg);
  }
  if (mask) require_same_extent(mask->extent(), volume.extent(), "to_canonical mask");

  CanonicalResult r;
  r.transform = CanonicalTransform::from_axes(*volume.axes, volume.extent(), volume.source);
  r.volume.data = r.transform.apply(volume.data);
  for (std::size_t c = 0; c < 3; ++c) r.volume.spacing[c] = volume.spacing[static_cast<std::size_t>(r.transform.source_axis[c])];
  r.volume.axes = kCanonicalAxes;
  r.volume.source = volume.source;
  if (mask) r.mask = LabelMask(r.transform.apply(mask->data));
  return r;
}

}  // namespace hipseg
