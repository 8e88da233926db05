#pragma once

// Three orientation networks -> activation volumes -> consensus -> threshold
// -> keep the largest components.

#include <array>
#include <optional>

#include "hipseg/fusion/fusion.hpp"
#include "hipseg/postprocess/components.hpp"

namespace hipseg {

struct Ensemble {
  std::array<nn::Network<float>, 3> nets;  // indexed by Orientation

  nn::Network<float>& operator[](Orientation o) { return nets[static_cast<std::size_t>(o)]; }
};

struct PostprocessConfig {
  double threshold = 0.5;
  std::size_t keep = 2;
  Connectivity connectivity = Connectivity::twenty_six;
};

struct Segmentation {
  std::array<ActivationVolume, 3> activations;
  ActivationVolume consensus;
  LabelMask thresholded;
  LabelMask mask;  // after component filtering
};

inline LabelMask postprocess(const ActivationVolume& activation, const PostprocessConfig& pp) {
  return keep_largest(binarize(activation, pp.threshold), pp.keep, pp.connectivity);
}

inline Segmentation segment(Ensemble& ensemble, const Volume& canonical, const PostprocessConfig& pp = {}) {
  Segmentation s;
  for (Orientation o : kOrientations) {
    s.activations[static_cast<std::size_t>(o)] = predict_orientation(ensemble[o], canonical, o);
  }
  s.consensus = consensus(s.activations[0], s.activations[1], s.activations[2]);
  s.thresholded = binarize(s.consensus, pp.threshold);
  s.mask = keep_largest(s.thresholded, pp.keep, pp.connectivity);
  return s;
}

}  // namespace hipseg
