#pragma once

#include <algorithm>
#include <utility>

#include "hipseg/volumes/volume.hpp"

namespace hipseg {

// A slice perpendicular to `normal` is laid out with the lower remaining
// axis as rows and the higher as columns.
struct PlaneAxes {
  int normal;
  int row;
  int col;
};

inline PlaneAxes plane_axes(Orientation o) noexcept {
  switch (o) {
    case Orientation::sagittal: return {0, 1, 2};
    case Orientation::coronal: return {1, 0, 2};
    case Orientation::axial: return {2, 0, 1};
  }
  return {0, 1, 2};
}

inline Index3 voxel_of(Orientation o, int index, int row, int col) noexcept {
  const PlaneAxes a = plane_axes(o);
  Index3 p{};
  p[static_cast<std::size_t>(a.normal)] = index;
  p[static_cast<std::size_t>(a.row)] = row;
  p[static_cast<std::size_t>(a.col)] = col;
  return p;
}

inline std::pair<int, int> slice_shape(const Extent3& e, Orientation o) noexcept {
  const PlaneAxes a = plane_axes(o);
  return {e[static_cast<std::size_t>(a.row)], e[static_cast<std::size_t>(a.col)]};
}

template <typename T>
Image2D<T> extract_slice(const Grid3<T>& grid, Orientation o, int index) {
  require_valid(SlicePlane{o, index}, grid.extent());
  const auto [rows, cols] = slice_shape(grid.extent(), o);
  Image2D<T> out(1, rows, cols);
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Index3 p = voxel_of(o, index, r, c);
      out(0, r, c) = grid(p[0], p[1], p[2]);
    }
  }
  return out;
}

template <typename T>
void write_slice(Grid3<T>& grid, Orientation o, int index, const Image2D<T>& slice) {
  require_valid(SlicePlane{o, index}, grid.extent());
  const auto [rows, cols] = slice_shape(grid.extent(), o);
  if (slice.rows() != rows || slice.cols() != cols) throw std::invalid_argument("write_slice: shape mismatch");
  for (int r = 0; r < rows; ++r) {
    for (int c = 0; c < cols; ++c) {
      const Index3 p = voxel_of(o, index, r, c);
      grid(p[0], p[1], p[2]) = slice(0, r, c);
    }
  }
}

enum class EdgeMode { replicate, zero };

// Channels are slices index-1, index, index+1 along the plane normal.
inline Planes<float> extract_slice_triplet(const Volume& volume, SlicePlane plane, EdgeMode edge = EdgeMode::replicate) {
  require_valid(plane, volume.extent());
  const int n = volume.extent()[static_cast<std::size_t>(axis_of(plane.orientation))];
  const auto [rows, cols] = slice_shape(volume.extent(), plane.orientation);
  Planes<float> out(3, rows, cols);
  for (int ch = 0; ch < 3; ++ch) {
    int idx = plane.index + ch - 1;
    if (idx < 0 || idx >= n) {
      if (edge == EdgeMode::zero) continue;
      idx = std::clamp(idx, 0, n - 1);
    }
    for (int r = 0; r < rows; ++r) {
      for (int c = 0; c < cols; ++c) {
        const Index3 p = voxel_of(plane.orientation, idx, r, c);
        out(ch, r, c) = volume.data(p[0], p[1], p[2]);
      }
    }
  }
  return out;
}

// Where a crop/pad window sits relative to its source image.
struct Placement {
  int source_rows = 0, source_cols = 0;
  int target_rows = 0, target_cols = 0;
  int src_row0 = 0, src_col0 = 0;  // first copied source pixel
  int dst_row0 = 0, dst_col0 = 0;  // where it lands in the target
  int copy_rows = 0, copy_cols = 0;
};

inline Placement center_placement(int source_rows, int source_cols, int target_rows, int target_cols) {
  if (target_rows < 1 || target_cols < 1) throw std::invalid_argument("center_crop_pad: target shape must be >= 1");
  Placement p;
  p.source_rows = source_rows;
  p.source_cols = source_cols;
  p.target_rows = target_rows;
  p.target_cols = target_cols;
  auto axis = [](int src, int tgt, int& src0, int& dst0, int& len) {
    if (src >= tgt) {
      src0 = (src - tgt) / 2;
      dst0 = 0;
      len = tgt;
    } else {
      src0 = 0;
      dst0 = (tgt - src) / 2;
      len = src;
    }
  };
  axis(source_rows, target_rows, p.src_row0, p.dst_row0, p.copy_rows);
  axis(source_cols, target_cols, p.src_col0, p.dst_col0, p.copy_cols);
  return p;
}

// Center crop and/or zero-pad every channel to the target shape.
template <typename T>
std::pair<Planes<T>, Placement> center_crop_pad(const Planes<T>& image, int target_rows, int target_cols) {
  const Placement p = center_placement(image.rows(), image.cols(), target_rows, target_cols);
  Planes<T> out(image.channels(), target_rows, target_cols, T{});
  for (int ch = 0; ch < image.channels(); ++ch) {
    for (int r = 0; r < p.copy_rows; ++r) {
      const T* src = &image(ch, p.src_row0 + r, p.src_col0);
      std::copy(src, src + p.copy_cols, &out(ch, p.dst_row0 + r, p.dst_col0));
    }
  }
  return {std::move(out), p};
}

// Inverse of center_crop_pad: back to the source shape, zeros where the
// window did not cover the source.
template <typename T>
Planes<T> restore_placement(const Planes<T>& image, const Placement& p) {
  if (image.rows() != p.target_rows || image.cols() != p.target_cols) {
    throw std::invalid_argument("restore_placement: image does not match placement target shape");
  }
  Planes<T> out(image.channels(), p.source_rows, p.source_cols, T{});
  for (int ch = 0; ch < image.channels(); ++ch) {
    for (int r = 0; r < p.copy_rows; ++r) {
      const T* src = &image(ch, p.dst_row0 + r, p.dst_col0);
      std::copy(src, src + p.copy_cols, &out(ch, p.src_row0 + r, p.src_col0));
    }
  }
  return out;
}

}  // namespace hipseg
