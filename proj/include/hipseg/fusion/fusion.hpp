#pragma once

// Slice-by-slice activation volumes per orientation, their voxelwise mean,
// and thresholding (ties at the threshold count as foreground).

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

#include "hipseg/network/inference.hpp"
#include "hipseg/volumes/slicing.hpp"

namespace hipseg {

struct ActivationVolume {
  Grid3<float> data;
  std::string tag;  // orientation name or "consensus"
  const Extent3& extent() const noexcept { return data.extent(); }
};

inline constexpr int kSlicesPerForward = 16;

template <typename T>
ActivationVolume predict_orientation(nn::Network<T>& net, const Volume& volume, Orientation o,
                                     EdgeMode edge = EdgeMode::replicate, int slices_per_forward = kSlicesPerForward) {
  ActivationVolume out{Grid3<float>(volume.extent(), 0.0f), std::string(name_of(o))};
  const int n = volume.extent()[static_cast<std::size_t>(axis_of(o))];
  const auto [rows, cols] = slice_shape(volume.extent(), o);
  const nn::CropShape crop = nn::compatible_crop(net.config(), rows, cols);
  const int chunk = std::max(1, slices_per_forward);
  for (int first = 0; first < n; first += chunk) {
    const int count = std::min(chunk, n - first);
    std::vector<Planes<float>> triplets;
    triplets.reserve(static_cast<std::size_t>(count));
    for (int s = 0; s < count; ++s) triplets.push_back(extract_slice_triplet(volume, {o, first + s}, edge));
    const auto maps = nn::predict_slices(net, triplets, crop);
    for (int s = 0; s < count; ++s) write_slice(out.data, o, first + s, maps[static_cast<std::size_t>(s)]);
  }
  return out;
}

inline ActivationVolume consensus(const ActivationVolume& a, const ActivationVolume& b, const ActivationVolume& c) {
  require_same_extent(a.extent(), b.extent(), "consensus");
  require_same_extent(a.extent(), c.extent(), "consensus");
  ActivationVolume out{Grid3<float>(a.extent(), 0.0f), "consensus"};
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    out.data[i] = static_cast<float>((static_cast<double>(a.data[i]) + b.data[i] + c.data[i]) / 3.0);
  }
  return out;
}

inline LabelMask binarize(const ActivationVolume& activation, double threshold = 0.5) {
  if (!(threshold > 0.0 && threshold < 1.0)) throw std::invalid_argument("threshold must be in (0, 1)");
  LabelMask m(activation.extent());
  for (std::size_t i = 0; i < activation.data.size(); ++i) m.data[i] = activation.data[i] >= threshold ? 1 : 0;
  return m;
}

}  // namespace hipseg
