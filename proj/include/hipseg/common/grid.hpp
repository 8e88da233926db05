#pragma once

// Dense 3D grids and multi-channel 2D planes used throughout the pipeline.
//
// Grid3 stores voxels with axis 0 varying fastest (the NIfTI on-disk order),
// so a flat index is i + nx * (j + ny * k).

#include <algorithm>
#include <array>
#include <cstddef>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace hipseg {

using Extent3 = std::array<int, 3>;
using Index3 = std::array<int, 3>;

inline std::size_t voxel_count(const Extent3& e) {
  return static_cast<std::size_t>(e[0]) * static_cast<std::size_t>(e[1]) *
         static_cast<std::size_t>(e[2]);
}

inline std::string to_string(const Extent3& e) {
  return std::to_string(e[0]) + "x" + std::to_string(e[1]) + "x" + std::to_string(e[2]);
}

template <typename T>
class Grid3 {
 public:
  using value_type = T;

  Grid3() = default;

  explicit Grid3(Extent3 extent, T fill = T{}) : extent_(extent) {
    for (int d : extent_) {
      if (d < 1) throw std::invalid_argument("Grid3: extent components must be >= 1, got " + to_string(extent_));
    }
    data_.assign(voxel_count(extent_), fill);
  }

  Grid3(Extent3 extent, std::vector<T> values) : extent_(extent), data_(std::move(values)) {
    if (data_.size() != voxel_count(extent_)) {
      throw std::invalid_argument("Grid3: value count does not match extent " + to_string(extent_));
    }
  }

  const Extent3& extent() const noexcept { return extent_; }
  int extent(int axis) const noexcept { return extent_[static_cast<std::size_t>(axis)]; }
  std::size_t size() const noexcept { return data_.size(); }
  bool empty() const noexcept { return data_.empty(); }

  std::size_t index(int i, int j, int k) const noexcept {
    return static_cast<std::size_t>(i) +
           static_cast<std::size_t>(extent_[0]) *
               (static_cast<std::size_t>(j) + static_cast<std::size_t>(extent_[1]) * static_cast<std::size_t>(k));
  }
  std::size_t index(const Index3& p) const noexcept { return index(p[0], p[1], p[2]); }

  Index3 coordinate(std::size_t flat) const noexcept {
    const auto nx = static_cast<std::size_t>(extent_[0]);
    const auto ny = static_cast<std::size_t>(extent_[1]);
    return {static_cast<int>(flat % nx), static_cast<int>((flat / nx) % ny), static_cast<int>(flat / (nx * ny))};
  }

  bool contains(int i, int j, int k) const noexcept {
    return i >= 0 && j >= 0 && k >= 0 && i < extent_[0] && j < extent_[1] && k < extent_[2];
  }

  T& operator()(int i, int j, int k) noexcept { return data_[index(i, j, k)]; }
  const T& operator()(int i, int j, int k) const noexcept { return data_[index(i, j, k)]; }
  T& operator[](std::size_t flat) noexcept { return data_[flat]; }
  const T& operator[](std::size_t flat) const noexcept { return data_[flat]; }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }
  std::vector<T>& storage() noexcept { return data_; }
  const std::vector<T>& storage() const noexcept { return data_; }

  friend bool operator==(const Grid3&, const Grid3&) = default;

 private:
  Extent3 extent_{0, 0, 0};
  std::vector<T> data_;
};

// channels x rows x cols, row-major inside each channel.
template <typename T>
class Planes {
 public:
  Planes() = default;
  Planes(int channels, int rows, int cols, T fill = T{})
      : channels_(channels), rows_(rows), cols_(cols),
        data_(static_cast<std::size_t>(channels) * rows * cols, fill) {
    if (channels < 1 || rows < 1 || cols < 1) throw std::invalid_argument("Planes: dimensions must be >= 1");
  }

  int channels() const noexcept { return channels_; }
  int rows() const noexcept { return rows_; }
  int cols() const noexcept { return cols_; }
  std::size_t plane_size() const noexcept { return static_cast<std::size_t>(rows_) * cols_; }
  std::size_t size() const noexcept { return data_.size(); }

  T& operator()(int c, int r, int q) noexcept { return data_[(static_cast<std::size_t>(c) * rows_ + r) * cols_ + q]; }
  const T& operator()(int c, int r, int q) const noexcept {
    return data_[(static_cast<std::size_t>(c) * rows_ + r) * cols_ + q];
  }

  std::span<T> channel(int c) noexcept { return std::span<T>(data_).subspan(c * plane_size(), plane_size()); }
  std::span<const T> channel(int c) const noexcept {
    return std::span<const T>(data_).subspan(c * plane_size(), plane_size());
  }

  std::span<T> values() noexcept { return data_; }
  std::span<const T> values() const noexcept { return data_; }

  friend bool operator==(const Planes&, const Planes&) = default;

 private:
  int channels_ = 0;
  int rows_ = 0;
  int cols_ = 0;
  std::vector<T> data_;
};

template <typename T>
using Image2D = Planes<T>;  // single-channel by convention

}  // namespace hipseg
