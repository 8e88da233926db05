#pragma once

#include <Eigen/Core>

#include <algorithm>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace hipseg::nn {

template <typename T>
using RowMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MatrixMap = Eigen::Map<RowMatrix<T>>;
template <typename T>
using ConstMatrixMap = Eigen::Map<const RowMatrix<T>>;

// Batch of images in N x C x H x W order (the public layout).
template <typename T>
struct Tensor4 {
  int n = 0, c = 0, h = 0, w = 0;
  std::vector<T> data;

  Tensor4() = default;
  Tensor4(int n_, int c_, int h_, int w_, T fill = T{})
      : n(n_), c(c_), h(h_), w(w_), data(static_cast<std::size_t>(n_) * c_ * h_ * w_, fill) {}

  std::size_t plane() const noexcept { return static_cast<std::size_t>(h) * w; }
  T& at(int b, int ch, int y, int x) noexcept {
    return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x];
  }
  const T& at(int b, int ch, int y, int x) const noexcept {
    return data[((static_cast<std::size_t>(b) * c + ch) * h + y) * w + x];
  }
};

// Internal activation layout: C x (N*H*W), one contiguous row per channel,
// so that every convolution is a single matrix product.
template <typename T>
struct FeatureMap {
  int channels = 0, batch = 0, height = 0, width = 0;
  std::vector<T> data;

  FeatureMap() = default;
  FeatureMap(int c, int n, int h, int w, T fill = T{})
      : channels(c), batch(n), height(h), width(w), data(static_cast<std::size_t>(c) * n * h * w, fill) {}

  std::size_t columns() const noexcept { return static_cast<std::size_t>(batch) * height * width; }
  std::size_t plane() const noexcept { return static_cast<std::size_t>(height) * width; }

  MatrixMap<T> matrix() { return MatrixMap<T>(data.data(), channels, static_cast<Eigen::Index>(columns())); }
  ConstMatrixMap<T> matrix() const {
    return ConstMatrixMap<T>(data.data(), channels, static_cast<Eigen::Index>(columns()));
  }

  T* row(int c) noexcept { return data.data() + static_cast<std::size_t>(c) * columns(); }
  const T* row(int c) const noexcept { return data.data() + static_cast<std::size_t>(c) * columns(); }

  bool same_shape(const FeatureMap& o) const noexcept {
    return channels == o.channels && batch == o.batch && height == o.height && width == o.width;
  }
};

template <typename T>
FeatureMap<T> to_feature_map(const Tensor4<T>& t) {
  FeatureMap<T> f(t.c, t.n, t.h, t.w);
  const std::size_t plane = t.plane();
  for (int b = 0; b < t.n; ++b)
    for (int ch = 0; ch < t.c; ++ch) {
      const T* src = t.data.data() + (static_cast<std::size_t>(b) * t.c + ch) * plane;
      std::copy(src, src + plane, f.row(ch) + static_cast<std::size_t>(b) * plane);
    }
  return f;
}

template <typename T>
Tensor4<T> to_tensor(const FeatureMap<T>& f) {
  Tensor4<T> t(f.batch, f.channels, f.height, f.width);
  const std::size_t plane = f.plane();
  for (int b = 0; b < f.batch; ++b)
    for (int ch = 0; ch < f.channels; ++ch) {
      const T* src = f.row(ch) + static_cast<std::size_t>(b) * plane;
      std::copy(src, src + plane, t.data.data() + (static_cast<std::size_t>(b) * f.channels + ch) * plane);
    }
  return t;
}

template <typename T>
struct Param {
  std::string name;
  std::vector<T> value;
  std::vector<T> grad;

  void resize(std::size_t n) {
    value.assign(n, T(0));
    grad.assign(n, T(0));
  }
  void zero_grad() { std::fill(grad.begin(), grad.end(), T(0)); }
};

enum class Mode { train, infer };

}  // namespace hipseg::nn
