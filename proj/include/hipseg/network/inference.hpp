#pragma once

// Full-slice prediction: crop/pad the slice triplet to a network-compatible
// shape, run the net with running batch-norm statistics, and put the
// foreground activation back on the original slice grid.

#include <algorithm>
#include <vector>

#include "hipseg/network/unet.hpp"
#include "hipseg/volumes/slicing.hpp"

namespace hipseg::nn {

struct CropShape {
  int rows = 0;
  int cols = 0;
};

// Smallest shape >= the slice that the network accepts (padding only).
inline CropShape compatible_crop(const NetworkConfig& config, int rows, int cols) {
  return {compatible_extent(rows, config.divisor()), compatible_extent(cols, config.divisor())};
}

// All triplets must share one shape. Returns one foreground map per slice.
template <typename T>
std::vector<Image2D<float>> predict_slices(Network<T>& net, const std::vector<Planes<float>>& triplets, CropShape crop) {
  std::vector<Image2D<float>> out;
  if (triplets.empty()) return out;
  net.require_compatible(crop.rows, crop.cols);
  const int n = static_cast<int>(triplets.size());
  const int channels = triplets.front().channels();
  Tensor4<T> batch(n, channels, crop.rows, crop.cols);
  Placement placement;
  for (int b = 0; b < n; ++b) {
    const auto& t = triplets[static_cast<std::size_t>(b)];
    if (t.rows() != triplets.front().rows() || t.cols() != triplets.front().cols() || t.channels() != channels) {
      throw std::invalid_argument("predict_slices: triplets differ in shape");
    }
    auto [cropped, p] = center_crop_pad(t, crop.rows, crop.cols);
    placement = p;
    std::transform(cropped.values().begin(), cropped.values().end(),
                   batch.data.begin() + static_cast<std::ptrdiff_t>(b) * channels * crop.rows * crop.cols,
                   [](float v) { return static_cast<T>(v); });
  }
  const Tensor4<T> act = net.forward(batch, Mode::infer);
  const int fg = act.c - 1;
  out.reserve(static_cast<std::size_t>(n));
  for (int b = 0; b < n; ++b) {
    Image2D<float> window(1, crop.rows, crop.cols);
    for (int r = 0; r < crop.rows; ++r)
      for (int c = 0; c < crop.cols; ++c) window(0, r, c) = static_cast<float>(act.at(b, fg, r, c));
    out.push_back(restore_placement(window, placement));
  }
  return out;
}

template <typename T>
Image2D<float> predict_slice(Network<T>& net, const Planes<float>& triplet, CropShape crop) {
  return std::move(predict_slices(net, std::vector<Planes<float>>{triplet}, crop).front());
}

template <typename T>
Image2D<float> predict_slice(Network<T>& net, const Planes<float>& triplet) {
  return predict_slice(net, triplet, compatible_crop(net.config(), triplet.rows(), triplet.cols()));
}

}  // namespace hipseg::nn
